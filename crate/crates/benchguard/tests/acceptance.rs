//! Acceptance gate: one test per release criterion, each printing a single
//! PASS line on success (a failed assert fails the test instead).
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use benchguard::dataio::{FeatureTable, SubjectScore, SubjectTable};
use benchguard::loso::{run_loso, select_cutoff};
use benchguard::metrics::{
    auroc, average_precision, classification_metrics, macro_f1_at, ConfusionCounts, ScoredLabels,
};
use benchguard::rankaudit::{
    bootstrap_rank_audit, rank_association, ConfigScorePair, ConfigSubjectScores,
};
use benchguard::reflearn::{
    logreg_gradient, logreg_objective, parse_grid, pca_fit, run_sweep, synth_corpus, SynthSpec,
};
use benchguard::report::to_canonical_json;
use benchguard::rng::substream;
use benchguard::stress::{
    build_paired_slices, load_annotations, multiseed_summary, paired_shift,
    signflip_gap_test, signflip_gap_test_exhaustive, BandRules, PairedDelta, SeedResult, Sided,
};

fn pass(n: usize, what: &str) {
    println!("ACCEPTANCE {n}: PASS — {what}");
}

// -------------------------------------------------------------------------
// 1. published confusion-matrix anchors
// -------------------------------------------------------------------------

#[test]
fn criterion_01_confusion_anchor_values() {
    let cases: [(usize, usize, usize, usize, f64); 3] = [
        (138, 51, 28, 58, 0.686),
        (141, 48, 43, 43, 0.621),
        (155, 34, 32, 54, 0.723),
    ];
    for (tn, fp, fn_, tp, want_macro) in cases {
        let m = classification_metrics(&ConfusionCounts { tn, fp, fn_, tp }).unwrap();
        assert!(
            (m.macro_f1 - want_macro).abs() < 0.0005,
            "macro-F1 {} vs expected {want_macro}",
            m.macro_f1
        );
    }
    let first =
        classification_metrics(&ConfusionCounts { tn: 138, fp: 51, fn_: 28, tp: 58 }).unwrap();
    assert!((first.accuracy - 0.713).abs() < 0.0005);
    assert!((first.balanced_accuracy - 0.702).abs() < 0.0005);
    pass(1, "reference confusion matrices reproduce published macro-F1/accuracy");
}

// -------------------------------------------------------------------------
// 2. AUROC / AP vs exhaustive oracles
// -------------------------------------------------------------------------

fn oracle_auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, (&si, &li)) in scores.iter().zip(labels).enumerate() {
        for (&sj, &lj) in scores.iter().zip(labels).skip(i + 1) {
            let (pos, neg) = match (li, lj) {
                (1, 0) => (si, sj),
                (0, 1) => (sj, si),
                _ => continue,
            };
            pairs += 1.0;
            if pos > neg {
                wins += 1.0;
            } else if pos == neg {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn oracle_ap(scores: &[f64], labels: &[u8]) -> f64 {
    // group into descending tie blocks; precision is evaluated once per block
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let p_total = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut seen = 0.0;
    let mut tp = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let block_tp = order[i..j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        seen += (j - i) as f64;
        tp += block_tp;
        ap += (block_tp / p_total) * (tp / seen);
        i = j;
    }
    ap
}

#[test]
fn criterion_02_ranking_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_202);
    for trial in 0..1000 {
        let n = rng.gen_range(2..=200);
        let quantized = trial % 3 == 0; // force heavy ties on a third of trials
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let s: f64 = if quantized {
                (rng.gen_range(0..=4) as f64) / 4.0
            } else {
                rng.gen()
            };
            scores.push(s);
            labels.push(rng.gen_range(0..=1u8));
        }
        if !labels.contains(&0) || !labels.contains(&1) {
            labels[0] = 0;
            labels[n - 1] = 1;
        }
        let data = ScoredLabels::new(scores.clone(), labels.clone()).unwrap();
        assert_eq!(auroc(&data).unwrap(), oracle_auroc(&scores, &labels), "trial {trial}");
        let ap = average_precision(&data).unwrap();
        assert!((ap - oracle_ap(&scores, &labels)).abs() <= 1e-12, "trial {trial}");
    }
    pass(2, "AUROC matches pair oracle exactly, AP matches block oracle ≤ 1e-12 on 1000 instances");
}

// -------------------------------------------------------------------------
// 3. LOSO: no held-out leakage, separable fixture, tie-break
// -------------------------------------------------------------------------

fn subjects(rows: &[(&str, u8, f64)]) -> SubjectTable {
    SubjectTable {
        rows: rows
            .iter()
            .map(|(s, l, sc)| SubjectScore {
                subject_id: s.to_string(),
                label: *l,
                score: *sc,
            })
            .collect(),
    }
}

#[test]
fn criterion_03_loso_leakage_and_tiebreak() {
    // leakage: perturbing the held-out subject's score never moves its
    // fold's cutoff
    let base = subjects(&[
        ("s1", 0, 0.31),
        ("s2", 1, 0.62),
        ("s3", 0, 0.44),
        ("s4", 1, 0.93),
        ("s5", 0, 0.58),
        ("s6", 1, 0.71),
        ("s7", 1, 0.49),
    ]);
    let clean = run_loso(&base).unwrap();
    for poison in [0.0, 0.013, 0.5, 0.97, 1.0] {
        for fold in 0..base.rows.len() {
            let mut t = base.clone();
            t.rows[fold].score = poison;
            let poisoned = run_loso(&t).unwrap();
            // rows are id-sorted, so fold order matches row order
            assert_eq!(clean.cutoffs[fold], poisoned.cutoffs[fold]);
        }
    }

    // globally separable scores pool to perfect macro-F1
    let sep = subjects(&[
        ("a", 0, 0.05),
        ("b", 0, 0.15),
        ("c", 0, 0.22),
        ("d", 1, 0.81),
        ("e", 1, 0.88),
        ("f", 1, 0.97),
    ]);
    assert_eq!(run_loso(&sep).unwrap().metrics.macro_f1, 1.0);

    // 4-point tie fixture: several candidates are perfect; closest-to-0.5 wins
    let train =
        ScoredLabels::new(vec![0.1, 0.2, 0.8, 0.9], vec![0, 0, 1, 1]).unwrap();
    assert_eq!(select_cutoff(&train).unwrap().cutoff, 0.5);

    pass(3, "LOSO cutoffs ignore the held-out subject; separable → 1.0; tie-break → 0.5");
}

// -------------------------------------------------------------------------
// 4. rank-association identities
// -------------------------------------------------------------------------

fn pairs_of(cv: &[f64], test: &[f64]) -> Vec<ConfigScorePair> {
    cv.iter()
        .zip(test)
        .enumerate()
        .map(|(i, (&c, &t))| ConfigScorePair {
            config_id: format!("cfg{i:03}"),
            cv_score: c,
            test_score: t,
        })
        .collect()
}

#[test]
fn criterion_04_rank_association_identities() {
    let identity = rank_association(&pairs_of(
        &[0.9, 0.8, 0.7, 0.6, 0.5],
        &[0.5, 0.4, 0.3, 0.2, 0.1],
    ))
    .unwrap();
    assert!((identity.pearson - 1.0).abs() < 1e-12);
    assert!((identity.spearman - 1.0).abs() < 1e-12);
    assert!((identity.kendall_tau - 1.0).abs() < 1e-12);
    assert_eq!(identity.discordance_rate, 0.0);

    let reversal =
        rank_association(&pairs_of(&[0.9, 0.8, 0.7], &[0.1, 0.2, 0.3])).unwrap();
    assert!((reversal.pearson + 1.0).abs() < 1e-12);
    assert!((reversal.spearman + 1.0).abs() < 1e-12);
    assert!((reversal.kendall_tau + 1.0).abs() < 1e-12);
    assert_eq!(reversal.discordance_rate, 1.0);

    // tie-free: discordance ≡ (1 − tau) / 2 to machine precision
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..500 {
        let n = rng.gen_range(3..=40);
        let cv: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let test: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let r = rank_association(&pairs_of(&cv, &test)).unwrap();
        assert!(
            (r.discordance_rate - (1.0 - r.kendall_tau) / 2.0).abs() < 1e-12,
            "discordance/tau identity violated"
        );
    }
    pass(4, "correlation identities hold; discordance = (1 − tau)/2 over 500 tie-free trials");
}

// -------------------------------------------------------------------------
// 5. bootstrap rank audit: dominance, duplicates, thread invariance
// -------------------------------------------------------------------------

fn random_matrix(n_configs: usize, n_subjects: usize, seed: u64) -> ConfigSubjectScores {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = (0..n_subjects).map(|_| rng.gen_range(0..=1)).collect();
    labels[0] = 0;
    labels[1] = 1;
    let skill: Vec<f64> = (0..n_configs).map(|c| 0.1 + 0.02 * c as f64).collect();
    let scores = skill
        .iter()
        .map(|&sk| {
            labels
                .iter()
                .map(|&l| {
                    let center = if l == 1 { 0.5 + sk } else { 0.5 - sk };
                    (center + rng.gen_range(-0.3..0.3)).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    ConfigSubjectScores {
        config_ids: (0..n_configs).map(|c| format!("cfg{c:02}")).collect(),
        subject_ids: (0..n_subjects).map(|s| format!("s{s:03}")).collect(),
        labels,
        scores,
    }
}

#[test]
fn criterion_05_bootstrap_rank_audit() {
    // strict dominance: one config separates perfectly, the other is wrong
    // everywhere, so rank 1 is certain
    let dom = ConfigSubjectScores {
        config_ids: vec!["best".into(), "worst".into()],
        subject_ids: (0..12).map(|s| format!("s{s}")).collect(),
        labels: vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1],
        scores: vec![
            vec![0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9],
            vec![0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1],
        ],
    };
    let r = bootstrap_rank_audit(&dom, 2000, 13).unwrap();
    assert_eq!(r.per_config["best"].p_rank1, 1.0);
    assert_eq!(r.per_config["best"].rank_interval_95, (1, 1));

    // a duplicated config shares the identical rank distribution
    let mut dup = random_matrix(5, 40, 7);
    dup.config_ids.push("clone".into());
    dup.scores.push(dup.scores[2].clone());
    let r = bootstrap_rank_audit(&dup, 2000, 13).unwrap();
    assert_eq!(r.per_config["clone"], r.per_config["cfg02"]);

    // byte-identical canonical reports across reruns and worker counts
    let big = random_matrix(20, 100, 99);
    let mut renders = Vec::new();
    for threads in [1usize, 4, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let report = pool.install(|| bootstrap_rank_audit(&big, 4000, 13)).unwrap();
        renders.push(to_canonical_json(&report).unwrap());
    }
    assert_eq!(renders[0], renders[1], "1 vs 4 workers");
    assert_eq!(renders[1], renders[2], "rerun");

    pass(5, "dominance certain, duplicates identical, reports byte-stable across worker counts");
}

// -------------------------------------------------------------------------
// 6. permutation-test calibration
// -------------------------------------------------------------------------

#[test]
fn criterion_06_permutation_calibration() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut hits = 0usize;
    const DATASETS: usize = 500;
    for ds in 0..DATASETS {
        // zero-mean symmetric null gaps
        let gaps: Vec<f64> = (0..30).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let (p, _) = signflip_gap_test(&gaps, 2000, 1000 + ds as u64, Sided::Two).unwrap();
        if p <= 0.05 {
            hits += 1;
        }
    }
    let fraction = hits as f64 / DATASETS as f64;
    assert!(
        (0.03..=0.07).contains(&fraction),
        "null rejection fraction {fraction} outside [0.03, 0.07]"
    );

    // exhaustive mode: 12 all-positive gaps → the observed assignment is the
    // single most extreme of 2^12
    let gaps = vec![0.2; 12];
    let (p, observed) = signflip_gap_test_exhaustive(&gaps, Sided::One).unwrap();
    assert_eq!(p, 1.0 / 4096.0);
    assert!((observed - 0.2).abs() < 1e-15);

    pass(6, "null p ≤ 0.05 fraction within [0.03, 0.07]; exhaustive n=12 gives exactly 1/4096");
}

// -------------------------------------------------------------------------
// 7. planted-effect recovery in the paired stress machinery
// -------------------------------------------------------------------------

#[test]
fn criterion_07_planted_shift_recovery() {
    const N: usize = 132;
    const TEXT_SHIFT: f64 = 0.422;
    const AUDIO_SHIFT: f64 = -0.004;
    const NOISE_SD: f64 = 0.1;
    let seeds = [13u64, 23, 37, 42, 79];

    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        // Box-Muller
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };

    let mut per_seed = Vec::new();
    for &seed in &seeds {
        let mut rng = substream(seed, 777);
        let mut text = Vec::with_capacity(N);
        let mut audio = Vec::with_capacity(N);
        let mut gaps = Vec::with_capacity(N);
        for i in 0..N {
            let t = (TEXT_SHIFT + NOISE_SD * normal(&mut rng)).clamp(-1.0, 1.0);
            let a = (AUDIO_SHIFT + NOISE_SD * normal(&mut rng)).clamp(-1.0, 1.0);
            text.push(PairedDelta { subject_id: format!("p{i:03}"), delta: t });
            audio.push(PairedDelta { subject_id: format!("p{i:03}"), delta: a });
            gaps.push(t - a);
        }
        let mut shifts = BTreeMap::new();
        shifts.insert("text".to_string(), paired_shift(&text, 5000, seed).unwrap());
        shifts.insert("audio".to_string(), paired_shift(&audio, 5000, seed).unwrap());
        let (gap_p, gap_mean) = signflip_gap_test(&gaps, 5000, seed, Sided::One).unwrap();
        assert!(gap_mean > 0.0, "seed {seed}: gap not positive");
        assert!(gap_p <= 0.001, "seed {seed}: gap p = {gap_p}");
        per_seed.push(SeedResult { seed, shifts, gap_mean, gap_p });
    }
    let summary = multiseed_summary(&per_seed).unwrap();
    assert_eq!(summary.per_modality["text"].seeds_ci_excluding_zero, 5);
    assert!(summary.per_modality["audio"].seeds_ci_excluding_zero <= 1); // crosses 0 in >= 4/5
    assert_eq!(summary.gap.seeds_positive, 5);
    assert!((summary.per_modality["text"].mean_shift - TEXT_SHIFT).abs() < 0.05);

    pass(7, "planted text/audio shifts recovered: text CI excludes 0, audio straddles, gap p ≤ 0.001");
}

// -------------------------------------------------------------------------
// 8. slice-rule enforcement
// -------------------------------------------------------------------------

#[test]
fn criterion_08_slice_rules() {
    // p1: exactly 9.9 s of heavy participant speech → dropped
    // p2: 10 s both bands, plus mid chunks that must not count
    // p3: neutral band under 10 s → dropped
    let csv = "\
subject_id,chunk_id,start_s,end_s,speaker,topic_score,self_relevance,confidence
p1,c1,0.0,9.9,participant,3,self,0.9
p1,c2,10.0,40.0,participant,0,self,0.9
p2,c1,0.0,10.0,participant,2,self,0.9
p2,c2,10.5,20.5,participant,0,other,0.8
p2,c3,21.0,80.0,participant,1,self,0.9
p2,c4,81.0,95.0,interviewer,3,self,0.9
p3,c1,0.0,30.0,participant,3,self,0.9
p3,c2,31.0,40.9,participant,0,self,0.9
";
    let anns = load_annotations(csv.as_bytes()).unwrap();
    let set = build_paired_slices(&anns, &BandRules::default()).unwrap();

    let retained: Vec<&str> = set.pairs.iter().map(|p| p.subject_id.as_str()).collect();
    assert_eq!(retained, ["p2"]);
    let dropped: Vec<(&str, &str)> =
        set.dropped.iter().map(|(s, r)| (s.as_str(), r.as_str())).collect();
    assert!(dropped.contains(&("p1", "heavy_under_10s")));
    assert!(dropped.contains(&("p3", "neutral_under_10s")));
    // retained + dropped partition the subjects
    assert_eq!(set.pairs.len() + set.dropped.len(), 3);

    // mid (topic 1) and interviewer chunks contributed nothing to p2
    let p2 = &set.pairs[0];
    assert_eq!(p2.heavy_speech_s, 10.0);
    assert_eq!(p2.neutral_speech_s, 10.0);
    assert_eq!(p2.heavy_chunks, ["c1"]);
    assert_eq!(p2.neutral_chunks, ["c2"]);

    pass(8, "9.9 s bands dropped, mid/interviewer chunks excluded, retained+dropped partition");
}

// -------------------------------------------------------------------------
// 9. reference-learner numerics
// -------------------------------------------------------------------------

#[test]
fn criterion_09_learner_numerics() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let n = 40;
    let d = 6;
    let x: Vec<Vec<f64>> =
        (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = 0.3;
    let c = 0.7;

    // analytic gradient vs central finite differences
    let (gw, gb) = logreg_gradient(&x, &y, c, &w, b);
    let h = 1e-6;
    for j in 0..=d {
        let mut lo = w.clone();
        let mut hi = w.clone();
        let (b_lo, b_hi) = if j == d {
            (b - h, b + h)
        } else {
            lo[j] -= h;
            hi[j] += h;
            (b, b)
        };
        let fd = (logreg_objective(&x, &y, c, &hi, b_hi) - logreg_objective(&x, &y, c, &lo, b_lo))
            / (2.0 * h);
        let analytic = if j == d { gb } else { gw[j] };
        let rel = (analytic - fd).abs() / fd.abs().max(1.0);
        assert!(rel <= 1e-6, "coordinate {j}: rel err {rel}");
    }

    // PCA: component orthonormality and k = d reconstruction identity
    let model = pca_fit(&x, d).unwrap();
    for i in 0..d {
        for j in 0..d {
            let dot: f64 = (0..d).map(|t| model.components[i][t] * model.components[j][t]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() <= 1e-8, "components {i},{j}: dot {dot}");
        }
    }
    for row in &x {
        let rec = model.reconstruct(&model.transform(row));
        for (a, b) in row.iter().zip(&rec) {
            assert!((a - b).abs() <= 1e-8, "reconstruction drift");
        }
    }

    pass(9, "gradient matches finite differences; PCA orthonormal; full-rank reconstruction exact");
}

// -------------------------------------------------------------------------
// 10. end-to-end sweep feeding the rank audit
// -------------------------------------------------------------------------

#[test]
fn criterion_10_end_to_end_sweep() {
    let spec = SynthSpec {
        n_subjects: 150,
        prevalence: 0.4,
        turns_mean: 6.0,
        separation: BTreeMap::from([
            ("A".to_string(), 0.1),
            ("V".to_string(), 0.15),
            ("T".to_string(), 1.2),
            ("F".to_string(), 0.05),
        ]),
        dims: BTreeMap::from([
            ("A".to_string(), 8),
            ("V".to_string(), 6),
            ("T".to_string(), 12),
            ("F".to_string(), 4),
        ]),
        seed: 13,
    };
    let corpus = synth_corpus(&spec).unwrap();

    let grid = parse_grid(
        "bundles=A;V;T;F;A+T;V+T;A+V;A+V+T+F\n\
         poolers=mean;meanstd\n\
         learners=logreg_pca4_c01;logreg_pca8_c1\n",
    )
    .unwrap();
    assert_eq!(grid.bundles.len() * grid.poolers.len() * grid.learners.len(), 32);

    let all: Vec<String> = corpus.subject_ids().into_iter().collect();
    let (dev, test): (Vec<_>, Vec<_>) =
        all.iter().cloned().partition(|s| s < &"subj0100".to_string());
    let sweep = run_sweep(&corpus, &dev, &test, &grid, &[13, 23, 37]).unwrap();
    assert_eq!(sweep.configs.len(), 32);

    // per-config test macro-F1 at the frozen 0.5 rule, then the audit
    let mut pairs = Vec::new();
    let mut matrix = ConfigSubjectScores {
        config_ids: Vec::new(),
        subject_ids: test.clone(),
        labels: test.iter().map(|s| corpus.subject_label(s).unwrap()).collect(),
        scores: Vec::new(),
    };
    for cfg in &sweep.configs {
        let scores: Vec<f64> =
            test.iter().map(|s| cfg.test_subject_scores[s]).collect();
        let test_score = macro_f1_at(&scores, &matrix.labels, 0.5).unwrap();
        pairs.push(ConfigScorePair {
            config_id: cfg.config_id.clone(),
            cv_score: cfg.cv_score,
            test_score,
        });
        matrix.config_ids.push(cfg.config_id.clone());
        matrix.scores.push(scores);
    }
    let assoc = rank_association(&pairs).unwrap();
    // every published association statistic must be present and finite
    for v in [
        assoc.pearson,
        assoc.spearman,
        assoc.kendall_tau,
        assoc.discordance_rate,
        assoc.median_abs_rank_shift,
    ] {
        assert!(v.is_finite());
    }
    for k in [1usize, 3, 5] {
        assert!(assoc.topk_overlap.contains_key(&k));
    }
    assert!(assoc.best_cv_test_rank >= 1 && assoc.best_test_cv_rank >= 1);

    let audit = bootstrap_rank_audit(&matrix, 1000, 13).unwrap();
    assert_eq!(audit.per_config.len(), 32);
    let total_p: f64 = audit.per_config.values().map(|c| c.p_rank1).sum();
    assert!(total_p >= 1.0 - 1e-9); // min-rank ties can push it above 1

    // text-dominant bundles should learn something real
    let best_cv = pairs.iter().cloned().max_by(|a, b| a.cv_score.total_cmp(&b.cv_score)).unwrap();
    assert!(best_cv.cv_score > 0.8, "best cv {:.3}", best_cv.cv_score);

    // poisoning the test labels must not move a single test score
    let mut poisoned_rows = corpus.rows().to_vec();
    for row in &mut poisoned_rows {
        if test.contains(&row.subject_id) {
            row.label = 1 - row.label;
        }
    }
    let poisoned = FeatureTable::new(poisoned_rows).unwrap();
    let sweep2 = run_sweep(&poisoned, &dev, &test, &grid, &[13, 23, 37]).unwrap();
    for (a, b) in sweep.configs.iter().zip(&sweep2.configs) {
        assert_eq!(a.config_id, b.config_id);
        assert_eq!(a.test_subject_scores, b.test_subject_scores);
        assert_eq!(a.cv_score, b.cv_score);
    }

    pass(10, "32-config sweep feeds the rank audit; test-label poisoning changes no score");
}
