//! Leave-one-subject-out evaluation with nested cutoff selection.
//!
//! Each fold holds out exactly one subject; the decision cutoff is chosen on
//! the remaining subjects only, by maximizing macro-F1 over a data-adaptive
//! candidate grid. Held-out decisions are pooled into a single confusion
//! matrix. Threshold-free AUROC/AP are computed once on all subjects.

use serde::Serialize;

use crate::dataio::SubjectTable;
use crate::error::{BgError, Result};
use crate::metrics::{
    auroc, average_precision, classification_metrics, confusion, macro_f1_at, ConfusionCounts,
    MetricBundle, ScoredLabels,
};

/// One fold per subject; training set is everyone else.
#[derive(Debug, Clone, PartialEq)]
pub struct LosoFoldPlan {
    pub folds: Vec<LosoFold>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LosoFold {
    pub held_out: String,
    pub training: Vec<String>,
}

/// Summary statistics over the per-fold cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffStats {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LosoReport {
    pub pooled_confusion: ConfusionCounts,
    pub metrics: MetricBundle,
    pub auroc: f64,
    pub ap: f64,
    pub cutoffs: Vec<f64>,
    pub cutoff_stats: CutoffStats,
    /// Held-out subjects whose training set collapsed to one class; their
    /// folds fell back to cutoff 0.5.
    pub degenerate_folds: Vec<String>,
}

/// Build the LOSO fold plan over distinct subject ids, sorted for
/// deterministic fold order.
pub fn loso_folds(subject_ids: &[String]) -> Result<LosoFoldPlan> {
    if subject_ids.len() < 3 {
        return Err(BgError::InvalidArg(format!(
            "loso needs >= 3 subjects, got {}",
            subject_ids.len()
        )));
    }
    let mut sorted: Vec<String> = subject_ids.to_vec();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(BgError::InvalidArg(format!("duplicate subject id: {}", w[0])));
        }
    }
    let folds = sorted
        .iter()
        .map(|held| LosoFold {
            held_out: held.clone(),
            training: sorted.iter().filter(|s| *s != held).cloned().collect(),
        })
        .collect();
    Ok(LosoFoldPlan { folds })
}

/// Outcome of cutoff selection on one training set.
pub struct CutoffChoice {
    pub cutoff: f64,
    /// Set when the training set had only one class and 0.5 was used.
    pub degenerate: bool,
}

/// Pick the cutoff maximizing training macro-F1.
///
/// Candidates are `{0, 1}` plus midpoints of consecutive distinct sorted
/// scores. Ties go to the candidate closest to 0.5, then to the smallest.
pub fn select_cutoff(train: &ScoredLabels) -> Result<CutoffChoice> {
    let has_pos = train.labels().contains(&1);
    let has_neg = train.labels().contains(&0);
    if !has_pos || !has_neg {
        return Ok(CutoffChoice { cutoff: 0.5, degenerate: true });
    }

    let mut distinct: Vec<f64> = train.scores().to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let mut candidates = vec![0.0, 1.0];
    for w in distinct.windows(2) {
        candidates.push((w[0] + w[1]) / 2.0);
    }

    let mut best: Option<(f64, f64)> = None; // (cutoff, macro_f1)
    for &c in &candidates {
        let score = macro_f1_at(train.scores(), train.labels(), c)?;
        let better = match best {
            None => true,
            Some((bc, bs)) => {
                score > bs
                    || (score == bs
                        && ((c - 0.5).abs() < (bc - 0.5).abs()
                            || ((c - 0.5).abs() == (bc - 0.5).abs() && c < bc)))
            }
        };
        if better {
            best = Some((c, score));
        }
    }
    Ok(CutoffChoice { cutoff: best.unwrap().0, degenerate: false })
}

/// Run the full LOSO evaluation over one subject-score table.
pub fn run_loso(subjects: &SubjectTable) -> Result<LosoReport> {
    let ids: Vec<String> = subjects.rows.iter().map(|r| r.subject_id.clone()).collect();
    let plan = loso_folds(&ids)?;
    let labels = subjects.labels();
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(BgError::InvalidArg("loso needs both classes present overall".into()));
    }

    let index: std::collections::HashMap<&str, usize> = subjects
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.subject_id.as_str(), i))
        .collect();

    let mut pooled = ConfusionCounts { tn: 0, fp: 0, fn_: 0, tp: 0 };
    let mut cutoffs = Vec::with_capacity(plan.folds.len());
    let mut degenerate_folds = Vec::new();
    for fold in &plan.folds {
        let train_scores: Vec<f64> =
            fold.training.iter().map(|s| subjects.rows[index[s.as_str()]].score).collect();
        let train_labels: Vec<u8> =
            fold.training.iter().map(|s| subjects.rows[index[s.as_str()]].label).collect();
        let choice = select_cutoff(&ScoredLabels::new(train_scores, train_labels)?)?;
        if choice.degenerate {
            degenerate_folds.push(fold.held_out.clone());
        }
        cutoffs.push(choice.cutoff);

        let held = &subjects.rows[index[fold.held_out.as_str()]];
        let pred = u8::from(held.score >= choice.cutoff);
        pooled.add(&confusion(&[held.label], &[pred])?);
    }

    let data = ScoredLabels::new(subjects.scores(), labels)?;
    Ok(LosoReport {
        metrics: classification_metrics(&pooled)?,
        pooled_confusion: pooled,
        auroc: auroc(&data)?,
        ap: average_precision(&data)?,
        cutoff_stats: cutoff_stats(&cutoffs),
        cutoffs,
        degenerate_folds,
    })
}

fn cutoff_stats(cutoffs: &[f64]) -> CutoffStats {
    let n = cutoffs.len() as f64;
    let mean = cutoffs.iter().sum::<f64>() / n;
    let var = if cutoffs.len() > 1 {
        cutoffs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = cutoffs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    CutoffStats {
        mean,
        sd: var.sqrt(),
        median,
        min: sorted[0],
        max: *sorted.last().unwrap(),
    }
}
