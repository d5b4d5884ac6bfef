//! The `bg` command line: every probe as a subcommand with machine-readable
//! outputs.
//!
//! Exit codes: 0 success; 1 schema/contract error (one-line diagnostic on
//! stderr); 2 lint violations found; 64 usage error. Outputs are written
//! atomically. `BG_THREADS` caps worker parallelism; results are invariant
//! to it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::dataio::{
    self, Band, FileFormat, PredictionTable, Split, SubjectScore, SubjectTable,
};
use crate::error::{BgError, Result};
use crate::loso;
use crate::metrics::macro_f1_at;
use crate::rankaudit::{self, ConfigScorePair, ConfigSubjectScores};
use crate::reflearn::{self, SynthSpec};
use crate::report::{self, write_atomic};
use crate::stress::{self, BandRules, PairedDelta, SeedResult, Sided};
use crate::transfer::{self, TransferTarget};

#[derive(Parser)]
#[command(name = "bg", version, about = "Subject-level benchmark-audit toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Leave-one-subject-out evaluation with nested cutoff selection.
    Loso {
        /// Prediction file (csv or jsonl); turn rows are pooled per subject.
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
        /// Config name printed in the Markdown table.
        #[arg(long, default_value = "run")]
        name: String,
    },
    /// CV-vs-test rank association and subject-bootstrap rank audit.
    Rank {
        /// CSV with columns config_id,cv_score.
        #[arg(long)]
        cv: PathBuf,
        /// Per-subject test predictions carrying a config_id column.
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 4000)]
        bootstrap: usize,
        #[arg(long, default_value_t = 13)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero-shot external scoring under the frozen 0.5 rule.
    Transfer {
        /// Target prediction file; repeatable, one target per file.
        #[arg(long, required = true)]
        preds: Vec<PathBuf>,
        /// severity.csv (subject_id,severity); replaces target labels.
        #[arg(long)]
        severity: Option<PathBuf>,
        /// Comma-separated clinical cutoffs, e.g. 8,17,24.
        #[arg(long)]
        cutoffs: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
    },
    /// Paired symptom-density stress test.
    Stress {
        #[arg(long)]
        annotations: PathBuf,
        /// Per-band predictions keyed by (subject_id, band, modality[, seed]).
        #[arg(long)]
        preds: PathBuf,
        #[arg(long, default_value_t = 5000)]
        boot: usize,
        #[arg(long, default_value_t = 5000)]
        perm: usize,
        /// Comma-separated seed list.
        #[arg(long, default_value = "13,23,37,42,79")]
        seeds: String,
        /// Gap modalities as "a,b" (gap = shift(a) - shift(b)).
        #[arg(long, default_value = "text,audio")]
        gap: String,
        #[arg(long, default_value = "two")]
        sided: String,
        /// Output JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Figure-data CSV (modality, mean_shift, ci_low, ci_high).
        #[arg(long)]
        figure_csv: Option<PathBuf>,
    },
    /// Reference-learner grid sweep over a feature file.
    Sweep {
        #[arg(long)]
        features: PathBuf,
        /// manifest.csv; train+dev subjects are swept, test subjects scored.
        #[arg(long)]
        manifest: PathBuf,
        /// Grid config (bundles=...; poolers=...; learners=...).
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value = "13,23,37")]
        seeds: String,
        /// Output CSV: config_id,cv_score.
        #[arg(long)]
        out: PathBuf,
        /// Output CSV: config_id,subject_id,label,score (feeds `bg rank`).
        #[arg(long)]
        test_scores: PathBuf,
    },
    /// Subject-disjointness lint; exit 2 when violations are found.
    Lint {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        preds: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic class-conditional Gaussian feature corpus.
    Synth {
        #[arg(long)]
        subjects: usize,
        #[arg(long)]
        prevalence: f64,
        #[arg(long)]
        turns_mean: f64,
        /// Per-block separation, e.g. A=0.1,T=2.0.
        #[arg(long)]
        separation: String,
        /// Per-block dimensionality, e.g. A=8,T=16.
        #[arg(long)]
        dims: String,
        #[arg(long, default_value_t = 13)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Entry point used by both the binary and the tests.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    init_thread_pool();
    let cli = match Cli::try_parse_from(argv.into_iter().map(Into::into)) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" that should exit 0
            if e.use_stderr() {
                eprint!("{e}");
                return 64;
            }
            print!("{e}");
            return 0;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bg: {e}");
            1
        }
    }
}

fn init_thread_pool() {
    if let Ok(threads) = std::env::var("BG_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            // ignored if a global pool already exists; results do not depend
            // on pool size
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Loso { preds, out, format, name } => cmd_loso(&preds, &out, format, &name),
        Command::Rank { cv, test, bootstrap, seed, out } => {
            cmd_rank(&cv, &test, bootstrap, seed, &out)
        }
        Command::Transfer { preds, severity, cutoffs, out, format } => {
            cmd_transfer(&preds, severity.as_deref(), cutoffs.as_deref(), &out, format)
        }
        Command::Stress { annotations, preds, boot, perm, seeds, gap, sided, out, figure_csv } => {
            cmd_stress(
                &annotations,
                &preds,
                boot,
                perm,
                &seeds,
                &gap,
                &sided,
                out.as_deref(),
                figure_csv.as_deref(),
            )
        }
        Command::Sweep { features, manifest, grid, seeds, out, test_scores } => {
            cmd_sweep(&features, &manifest, &grid, &seeds, &out, &test_scores)
        }
        Command::Lint { manifest, preds, out } => {
            cmd_lint(&manifest, preds.as_deref(), out.as_deref())
        }
        Command::Synth { subjects, prevalence, turns_mean, separation, dims, seed, out } => {
            cmd_synth(subjects, prevalence, turns_mean, &separation, &dims, seed, &out)
        }
    }
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

fn open(path: &Path) -> Result<File> {
    File::open(path)
        .map_err(|e| BgError::Load(format!("cannot open {}: {e}", path.display())))
}

fn load_pred_file(path: &Path) -> Result<PredictionTable> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => FileFormat::Jsonl,
        _ => FileFormat::Csv,
    };
    dataio::load_predictions(open(path)?, format)
        .map_err(|e| prefix_path(e, path))
}

fn prefix_path(e: BgError, path: &Path) -> BgError {
    match e {
        BgError::Load(msg) => BgError::Load(format!("{}: {msg}", path.display())),
        other => other,
    }
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| BgError::InvalidArg(format!("bad seed value: {t:?}"))))
        .collect()
}

fn parse_i64_list(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| BgError::InvalidArg(format!("bad cutoff value: {t:?}"))))
        .collect()
}

/// Parse "A=0.1,T=2.0" style per-block assignments.
fn parse_block_map(s: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (block, value) = item
            .split_once('=')
            .ok_or_else(|| BgError::InvalidArg(format!("expected block=value, got {item:?}")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| BgError::InvalidArg(format!("bad value in {item:?}")))?;
        out.insert(block.trim().to_string(), v);
    }
    if out.is_empty() {
        return Err(BgError::InvalidArg("empty block map".into()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn cmd_loso(preds: &Path, out: &Path, format: OutputFormat, name: &str) -> Result<i32> {
    let table = load_pred_file(preds)?;
    let subjects = dataio::pool_to_subject_scores(&table)?;
    let report = loso::run_loso(&subjects)?;
    let rendered = match format {
        OutputFormat::Json => report::to_canonical_json(&report)?,
        OutputFormat::Markdown => report::loso_markdown(name, &report),
    };
    write_atomic(out, rendered.as_bytes())?;
    Ok(0)
}

/// cv.csv: config_id,cv_score
fn load_cv_scores(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let headers = reader
        .headers()
        .map_err(|e| BgError::Load(format!("{}: bad header: {e}", path.display())))?
        .clone();
    if headers.get(0) != Some("config_id") || headers.get(1) != Some("cv_score") {
        return Err(BgError::Load(format!(
            "{}: needs columns config_id,cv_score",
            path.display()
        )));
    }
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| BgError::Load(format!("{}: row {row}: {e}", path.display())))?;
        let id = rec.get(0).unwrap_or("").to_string();
        let score: f64 = rec
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| BgError::Load(format!("{}: bad cv_score at row {row}", path.display())))?;
        if out.insert(id.clone(), score).is_some() {
            return Err(BgError::Load(format!(
                "{}: duplicate config {id} at row {row}",
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Group a prediction table by config_id into a shared-subject score matrix.
fn build_config_matrix(table: &PredictionTable) -> Result<ConfigSubjectScores> {
    let mut per_config: BTreeMap<&str, BTreeMap<&str, (u8, f64, usize)>> = BTreeMap::new();
    for r in table.rows() {
        let config = r.config_id.as_deref().ok_or_else(|| {
            BgError::Schema(format!("row for subject {} lacks config_id", r.subject_id))
        })?;
        let entry = per_config
            .entry(config)
            .or_default()
            .entry(&r.subject_id)
            .or_insert((r.label, 0.0, 0));
        if entry.0 != r.label {
            return Err(BgError::Integrity(format!(
                "conflicting labels for subject {}",
                r.subject_id
            )));
        }
        entry.1 += r.score;
        entry.2 += 1;
    }
    if per_config.is_empty() {
        return Err(BgError::InvalidArg("no configs in test predictions".into()));
    }
    let subject_ids: Vec<String> =
        per_config.values().next().unwrap().keys().map(|s| s.to_string()).collect();
    let subject_set: BTreeSet<&String> = subject_ids.iter().collect();
    let mut labels = Vec::new();
    for sid in &subject_ids {
        let (label, _, _) = per_config.values().next().unwrap()[sid.as_str()];
        labels.push(label);
    }
    let mut config_ids = Vec::new();
    let mut scores = Vec::new();
    for (config, subjects) in &per_config {
        if subjects.len() != subject_ids.len()
            || !subjects.keys().all(|s| subject_set.contains(&s.to_string()))
        {
            return Err(BgError::Schema(format!(
                "config {config} does not share the common subject set"
            )));
        }
        config_ids.push(config.to_string());
        scores.push(
            subject_ids
                .iter()
                .map(|sid| {
                    let (_, sum, n) = subjects[sid.as_str()];
                    sum / n as f64
                })
                .collect(),
        );
    }
    Ok(ConfigSubjectScores { config_ids, subject_ids, labels, scores })
}

fn cmd_rank(cv: &Path, test: &Path, bootstrap: usize, seed: u64, out: &Path) -> Result<i32> {
    let cv_scores = load_cv_scores(cv)?;
    let matrix = build_config_matrix(&load_pred_file(test)?)?;

    let mut pairs = Vec::new();
    for (c, config) in matrix.config_ids.iter().enumerate() {
        let cv_score = *cv_scores.get(config).ok_or_else(|| {
            BgError::Schema(format!("config {config} missing from the cv file"))
        })?;
        let test_score = macro_f1_at(&matrix.scores[c], &matrix.labels, 0.5)?;
        pairs.push(ConfigScorePair { config_id: config.clone(), cv_score, test_score });
    }
    let association = rankaudit::rank_association(&pairs)?;
    let bootstrap_report = rankaudit::bootstrap_rank_audit(&matrix, bootstrap, seed)?;

    let test_scores: BTreeMap<&str, f64> =
        pairs.iter().map(|p| (p.config_id.as_str(), p.test_score)).collect();
    let payload = json!({
        "association": association,
        "bootstrap": bootstrap_report,
        "test_scores": test_scores,
    });
    write_atomic(out, report::to_canonical_json(&payload)?.as_bytes())?;
    Ok(0)
}

fn cmd_transfer(
    preds: &[PathBuf],
    severity: Option<&Path>,
    cutoffs: Option<&str>,
    out: &Path,
    format: OutputFormat,
) -> Result<i32> {
    let severities = severity.map(|p| dataio::load_severities(open(p)?)).transpose()?;
    let cutoffs = cutoffs.map(parse_i64_list).transpose()?;

    let mut targets = Vec::new();
    for path in preds {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("target")
            .to_string();
        let subjects = dataio::pool_to_subject_scores(&load_pred_file(path)?)?;
        match &severities {
            None => targets.push(TransferTarget::Labeled { name, subjects }),
            Some(map) => {
                let mut subject_ids = Vec::new();
                let mut scores = Vec::new();
                let mut sevs = Vec::new();
                for row in &subjects.rows {
                    let sev = *map.get(&row.subject_id).ok_or_else(|| {
                        BgError::Schema(format!(
                            "subject {} missing from severity file",
                            row.subject_id
                        ))
                    })?;
                    subject_ids.push(row.subject_id.clone());
                    scores.push(row.score);
                    sevs.push(sev);
                }
                targets.push(TransferTarget::Severity {
                    name,
                    subject_ids,
                    scores,
                    severities: sevs,
                });
            }
        }
    }
    let report = transfer::zero_shot_report(&targets, cutoffs.as_deref())?;
    let rendered = match format {
        OutputFormat::Json => report::to_canonical_json(&report)?,
        OutputFormat::Markdown => report::transfer_markdown(&report),
    };
    write_atomic(out, rendered.as_bytes())?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_stress(
    annotations: &Path,
    preds: &Path,
    boot: usize,
    perm: usize,
    seeds: &str,
    gap: &str,
    sided: &str,
    out: Option<&Path>,
    figure_csv: Option<&Path>,
) -> Result<i32> {
    let seeds = parse_u64_list(seeds)?;
    if seeds.is_empty() {
        return Err(BgError::InvalidArg("at least one seed required".into()));
    }
    let sided = match sided {
        "one" => Sided::One,
        "two" => Sided::Two,
        other => return Err(BgError::InvalidArg(format!("bad --sided value: {other:?}"))),
    };
    let (gap_a, gap_b) = gap
        .split_once(',')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| BgError::InvalidArg("--gap needs two comma-separated modalities".into()))?;

    let anns = stress::load_annotations(open(annotations)?)?;
    let slices = stress::build_paired_slices(&anns, &BandRules::default())?;
    let retained: BTreeSet<&str> = slices.pairs.iter().map(|p| p.subject_id.as_str()).collect();
    if retained.is_empty() {
        return Err(BgError::InvalidArg("no participant passed slice construction".into()));
    }

    let table = load_pred_file(preds)?;
    // (modality, seed-or-any, subject, band) -> mean score
    let mut modalities: BTreeSet<String> = BTreeSet::new();
    for r in table.rows() {
        if let Some(m) = &r.modality {
            modalities.insert(m.clone());
        }
    }
    if modalities.is_empty() {
        return Err(BgError::Schema("stress predictions need a modality column".into()));
    }

    let score_for = |modality: &str, seed: u64, subject: &str, band: Band| -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for r in table.rows() {
            if r.modality.as_deref() == Some(modality)
                && r.subject_id == subject
                && r.band == Some(band)
                && (r.seed.is_none() || r.seed == Some(seed as i64))
            {
                sum += r.score;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    };

    let mut per_seed = Vec::new();
    for &seed in &seeds {
        let mut shifts = BTreeMap::new();
        let mut deltas_by_modality: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
        for modality in &modalities {
            let mut deltas = Vec::new();
            let mut keyed = BTreeMap::new();
            for pair in &slices.pairs {
                let sid = pair.subject_id.as_str();
                let (Some(h), Some(n)) = (
                    score_for(modality, seed, sid, Band::Heavy),
                    score_for(modality, seed, sid, Band::Neutral),
                ) else {
                    continue;
                };
                let delta = h - n;
                keyed.insert(sid, delta);
                deltas.push(PairedDelta { subject_id: sid.to_string(), delta });
            }
            if deltas.len() < 2 {
                return Err(BgError::InvalidArg(format!(
                    "modality {modality}: fewer than 2 retained participants with both bands \
                     (seed {seed})"
                )));
            }
            shifts.insert(modality.clone(), stress::paired_shift(&deltas, boot, seed)?);
            deltas_by_modality.insert(modality.as_str(), keyed);
        }

        let a = deltas_by_modality.get(gap_a.as_str()).ok_or_else(|| {
            BgError::InvalidArg(format!("gap modality {gap_a:?} not present in predictions"))
        })?;
        let b = deltas_by_modality.get(gap_b.as_str()).ok_or_else(|| {
            BgError::InvalidArg(format!("gap modality {gap_b:?} not present in predictions"))
        })?;
        let gaps: Vec<f64> = a
            .iter()
            .filter_map(|(sid, da)| b.get(sid).map(|db| da - db))
            .collect();
        if gaps.len() < 2 {
            return Err(BgError::InvalidArg(
                "fewer than 2 participants on the modality-overlap subset".into(),
            ));
        }
        let (gap_p, gap_mean) = stress::signflip_gap_test(&gaps, perm, seed, sided)?;
        per_seed.push(SeedResult { seed, shifts, gap_mean, gap_p });
    }

    let summary = stress::multiseed_summary(&per_seed)?;
    let payload = json!({
        "summary": summary,
        "retained_pairs": slices.pairs.len(),
        "dropped": slices.dropped,
        "gap_modalities": [gap_a, gap_b],
        "bootstrap_replicates": boot,
        "permutation_assignments": perm,
    });
    let rendered = report::to_canonical_json(&payload)?;
    match out {
        Some(path) => write_atomic(path, rendered.as_bytes())?,
        None => print!("{rendered}"),
    }
    if let Some(path) = figure_csv {
        write_atomic(path, report::stress_figure_csv(&summary).as_bytes())?;
    }
    Ok(0)
}

fn cmd_sweep(
    features: &Path,
    manifest: &Path,
    grid: &Path,
    seeds: &str,
    out: &Path,
    test_scores: &Path,
) -> Result<i32> {
    let seeds = parse_u64_list(seeds)?;
    let table = dataio::load_features(open(features)?).map_err(|e| prefix_path(e, features))?;
    let manifest = dataio::load_manifest(open(manifest)?)?;
    let lint = dataio::lint_subject_disjoint(&manifest, None);
    if !lint.clean {
        return Err(BgError::Integrity(format!(
            "manifest fails subject-disjointness lint ({} violations)",
            lint.violations.len()
        )));
    }
    let grid = reflearn::parse_grid(&std::fs::read_to_string(grid)?)?;

    let mut dev = Vec::new();
    let mut test = Vec::new();
    for e in &manifest.entries {
        match e.split {
            Split::Train | Split::Dev => dev.push(e.subject_id.clone()),
            Split::Test => test.push(e.subject_id.clone()),
        }
    }
    dev.sort();
    dev.dedup();
    test.sort();
    test.dedup();

    let result = reflearn::run_sweep(&table, &dev, &test, &grid, &seeds)?;

    let mut cv_csv = String::from("config_id,cv_score\n");
    for cfg in &result.configs {
        cv_csv.push_str(&format!("{},{:.6}\n", cfg.config_id, cfg.cv_score));
    }
    write_atomic(out, cv_csv.as_bytes())?;

    let mut ts_csv = String::from("subject_id,label,score,config_id\n");
    for cfg in &result.configs {
        for (sid, score) in &cfg.test_subject_scores {
            let label = table.subject_label(sid)?;
            ts_csv.push_str(&format!("{sid},{label},{score:.6},{}\n", cfg.config_id));
        }
    }
    write_atomic(test_scores, ts_csv.as_bytes())?;
    Ok(0)
}

fn cmd_lint(manifest: &Path, preds: Option<&Path>, out: Option<&Path>) -> Result<i32> {
    let manifest = dataio::load_manifest(open(manifest)?)?;
    let table = preds.map(load_pred_file).transpose()?;
    let report = dataio::lint_subject_disjoint(&manifest, table.as_ref());
    let rendered = report::to_canonical_json(&report)?;
    match out {
        Some(path) => write_atomic(path, rendered.as_bytes())?,
        None => print!("{rendered}"),
    }
    Ok(if report.clean { 0 } else { 2 })
}

fn cmd_synth(
    subjects: usize,
    prevalence: f64,
    turns_mean: f64,
    separation: &str,
    dims: &str,
    seed: u64,
    out: &Path,
) -> Result<i32> {
    let separation = parse_block_map(separation)?;
    let dims = parse_block_map(dims)?
        .into_iter()
        .map(|(k, v)| {
            if v.fract() != 0.0 || v < 1.0 {
                Err(BgError::InvalidArg(format!("block {k} dimensionality must be a positive integer")))
            } else {
                Ok((k, v as usize))
            }
        })
        .collect::<Result<BTreeMap<String, usize>>>()?;
    let spec = SynthSpec { n_subjects: subjects, prevalence, turns_mean, separation, dims, seed };
    let table = reflearn::synth_corpus(&spec)?;
    let mut buf = Vec::new();
    dataio::write_features_csv(&table, &mut buf)?;
    write_atomic(out, &buf)?;
    Ok(0)
}

// kept for API parity with the subject-table consumers in tests
pub fn subject_table_from_pairs(pairs: &[(String, u8, f64)]) -> SubjectTable {
    SubjectTable {
        rows: pairs
            .iter()
            .map(|(s, l, sc)| SubjectScore { subject_id: s.clone(), label: *l, score: *sc })
            .collect(),
    }
}
