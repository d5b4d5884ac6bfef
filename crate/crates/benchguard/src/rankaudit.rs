//! Leaderboard-instability machinery: CV-vs-test rank association and
//! subject-bootstrap rank uncertainty across configurations.
//!
//! Conventions, declared once: Kendall tau is tau-b (tie-corrected);
//! the discordance denominator is all C(n,2) pairs, ties counting as not
//! reversed; display ranks use competition ranking (best = 1, ties share the
//! minimum rank); Spearman is Pearson on average (fractional) ranks.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BgError, Result};
use crate::metrics::macro_f1_at;
use crate::rng::substream;

/// One configuration's development-CV score and official-test score.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigScorePair {
    pub config_id: String,
    pub cv_score: f64,
    pub test_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationReport {
    pub pearson: f64,
    pub spearman: f64,
    pub kendall_tau: f64,
    pub discordance_rate: f64,
    pub topk_overlap: BTreeMap<usize, usize>,
    pub best_cv_test_rank: usize,
    pub best_test_cv_rank: usize,
    pub median_abs_rank_shift: f64,
}

/// Competition ranks: best (largest) value gets rank 1; ties share the
/// minimum rank.
pub fn competition_ranks(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|&v| 1 + values.iter().filter(|&&w| w > v).count())
        .collect()
}

/// Average (fractional) ranks over descending order, for Spearman.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let above = values.iter().filter(|&&w| w > v).count();
            let tied = values.iter().filter(|&&w| w == v).count();
            above as f64 + (tied as f64 + 1.0) / 2.0
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Kendall tau-b plus the strict-discordance count.
fn kendall_tau_b(x: &[f64], y: &[f64]) -> (f64, usize) {
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_x = 0i64;
    let mut ties_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                ties_x += 1;
                ties_y += 1;
            } else if dx == 0.0 {
                ties_x += 1;
            } else if dy == 0.0 {
                ties_y += 1;
            } else if dx * dy > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - ties_x) as f64) * ((n0 - ties_y) as f64)).sqrt();
    let tau = (concordant - discordant) as f64 / denom;
    (tau, discordant as usize)
}

/// Top-k config ids by score, deterministic config_id tie-break at the
/// boundary (sort by descending score, then ascending id).
fn top_k<'a>(pairs: &'a [ConfigScorePair], key: impl Fn(&ConfigScorePair) -> f64, k: usize) -> Vec<&'a str> {
    let mut order: Vec<&ConfigScorePair> = pairs.iter().collect();
    order.sort_by(|a, b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap()
            .then_with(|| a.config_id.cmp(&b.config_id))
    });
    order.iter().take(k).map(|p| p.config_id.as_str()).collect()
}

/// Associate CV and test scores across configurations.
pub fn rank_association(pairs: &[ConfigScorePair]) -> Result<AssociationReport> {
    let n = pairs.len();
    if n < 3 {
        return Err(BgError::InvalidArg(format!("rank_association needs >= 3 configs, got {n}")));
    }
    for p in pairs {
        if !p.cv_score.is_finite() || !p.test_score.is_finite() {
            return Err(BgError::Schema(format!("non-finite score for config {}", p.config_id)));
        }
    }
    let cv: Vec<f64> = pairs.iter().map(|p| p.cv_score).collect();
    let test: Vec<f64> = pairs.iter().map(|p| p.test_score).collect();

    let (tau, discordant) = kendall_tau_b(&cv, &test);
    let n0 = n * (n - 1) / 2;

    let cv_ranks = competition_ranks(&cv);
    let test_ranks = competition_ranks(&test);
    let mut shifts: Vec<f64> = cv_ranks
        .iter()
        .zip(&test_ranks)
        .map(|(&a, &b)| (a as f64 - b as f64).abs())
        .collect();
    shifts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_shift = if n % 2 == 1 {
        shifts[n / 2]
    } else {
        (shifts[n / 2 - 1] + shifts[n / 2]) / 2.0
    };

    let mut topk_overlap = BTreeMap::new();
    for k in [1usize, 3, 5] {
        let kk = k.min(n);
        let cv_top = top_k(pairs, |p| p.cv_score, kk);
        let test_top = top_k(pairs, |p| p.test_score, kk);
        topk_overlap.insert(k, cv_top.iter().filter(|id| test_top.contains(id)).count());
    }

    // best-by-one-axis config, tie-broken by id, read off on the other axis
    let best_cv = top_k(pairs, |p| p.cv_score, 1)[0];
    let best_test = top_k(pairs, |p| p.test_score, 1)[0];
    let pos = |id: &str| pairs.iter().position(|p| p.config_id == id).unwrap();

    Ok(AssociationReport {
        pearson: pearson(&cv, &test),
        spearman: pearson(&average_ranks(&cv), &average_ranks(&test)),
        kendall_tau: tau,
        discordance_rate: discordant as f64 / n0 as f64,
        topk_overlap,
        best_cv_test_rank: test_ranks[pos(best_cv)],
        best_test_cv_rank: cv_ranks[pos(best_test)],
        median_abs_rank_shift: median_shift,
    })
}

/// Per-config subject scores on a shared subject set, for bootstrapping.
#[derive(Debug, Clone)]
pub struct ConfigSubjectScores {
    pub config_ids: Vec<String>,
    pub subject_ids: Vec<String>,
    /// One ground-truth label per subject, shared across configs.
    pub labels: Vec<u8>,
    /// `scores[c][s]` is config `c`'s score for subject `s`.
    pub scores: Vec<Vec<f64>>,
}

impl ConfigSubjectScores {
    pub fn validate(&self) -> Result<()> {
        let m = self.subject_ids.len();
        if m == 0 {
            return Err(BgError::InvalidArg("empty subject set".into()));
        }
        if self.labels.len() != m {
            return Err(BgError::Schema("labels/subjects length mismatch".into()));
        }
        if self.config_ids.len() != self.scores.len() {
            return Err(BgError::Schema("config_ids/scores length mismatch".into()));
        }
        if self.scores.iter().any(|row| row.len() != m) {
            return Err(BgError::Schema("all configs must share the same subject set".into()));
        }
        if !self.labels.contains(&0) || !self.labels.contains(&1) {
            return Err(BgError::InvalidArg("both classes must be present".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigRankStats {
    /// Fraction of replicates in which this config holds rank 1 (shared-min
    /// ranking: ties can make several configs rank-1 in one replicate).
    pub p_rank1: f64,
    pub rank_interval_95: (usize, usize),
    pub mean_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapRankReport {
    pub replicates: usize,
    pub seed: u64,
    /// Resamples redrawn because a class was missing from the draw.
    pub redraws: usize,
    pub per_config: BTreeMap<String, ConfigRankStats>,
}

/// Subject-bootstrap rank audit.
///
/// Each replicate draws one shared with-replacement subject resample, scores
/// every config on it (macro-F1 at cutoff 0.5), and ranks configs by
/// competition ranking. Resamples missing a class are redrawn within the
/// replicate's substream so the replicate count stays exact.
pub fn bootstrap_rank_audit(
    data: &ConfigSubjectScores,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapRankReport> {
    data.validate()?;
    if replicates < 1 {
        return Err(BgError::InvalidArg("replicates must be >= 1".into()));
    }
    let m = data.subject_ids.len();
    let n_cfg = data.config_ids.len();

    let per_replicate: Vec<(Vec<usize>, usize)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r);
            let mut redraws = 0usize;
            let indices: Vec<usize> = loop {
                let draw: Vec<usize> = (0..m).map(|_| rng.gen_range(0..m)).collect();
                let has_pos = draw.iter().any(|&i| data.labels[i] == 1);
                let has_neg = draw.iter().any(|&i| data.labels[i] == 0);
                if has_pos && has_neg {
                    break draw;
                }
                redraws += 1;
            };
            let labels: Vec<u8> = indices.iter().map(|&i| data.labels[i]).collect();
            let values: Vec<f64> = data
                .scores
                .iter()
                .map(|row| {
                    let scores: Vec<f64> = indices.iter().map(|&i| row[i]).collect();
                    macro_f1_at(&scores, &labels, 0.5).expect("both classes guaranteed by redraw")
                })
                .collect();
            (competition_ranks(&values), redraws)
        })
        .collect();

    let mut rank_dists: Vec<Vec<usize>> = vec![Vec::with_capacity(replicates); n_cfg];
    let mut redraws = 0usize;
    for (ranks, rd) in per_replicate {
        redraws += rd;
        for (c, r) in ranks.into_iter().enumerate() {
            rank_dists[c].push(r);
        }
    }

    let mut per_config = BTreeMap::new();
    for (c, dist) in rank_dists.iter_mut().enumerate() {
        let p_rank1 =
            dist.iter().filter(|&&r| r == 1).count() as f64 / replicates as f64;
        let mean_rank = dist.iter().sum::<usize>() as f64 / replicates as f64;
        dist.sort_unstable();
        let sorted: Vec<f64> = dist.iter().map(|&r| r as f64).collect();
        let lo = percentile(&sorted, 2.5).floor() as usize;
        let hi = percentile(&sorted, 97.5).ceil() as usize;
        per_config.insert(
            data.config_ids[c].clone(),
            ConfigRankStats { p_rank1, rank_interval_95: (lo, hi), mean_rank },
        );
    }
    Ok(BootstrapRankReport { replicates, seed, redraws, per_config })
}

/// Linear-interpolated percentile of a sorted sample, q in [0, 100].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}
