//! Zero-shot external scoring under the fixed source decision rule.
//!
//! Predictions are always `score >= 0.5`; there is deliberately no
//! target-side calibration, threshold tuning, or fitting of any kind.
//! Labels come either directly from the target or from severity scores
//! binarized at one or more clinical cutoffs.

use serde::Serialize;

use crate::dataio::{binarize_severity, SubjectTable};
use crate::error::{BgError, Result};
use crate::metrics::{auroc, binarize_scores, classification_metrics, confusion, ScoredLabels};

/// A target corpus: subject scores plus either binary labels or severities.
#[derive(Debug, Clone)]
pub enum TransferTarget {
    Labeled { name: String, subjects: SubjectTable },
    Severity { name: String, subject_ids: Vec<String>, scores: Vec<f64>, severities: Vec<i64> },
}

impl TransferTarget {
    fn name(&self) -> &str {
        match self {
            TransferTarget::Labeled { name, .. } => name,
            TransferTarget::Severity { name, .. } => name,
        }
    }

    fn n(&self) -> usize {
        match self {
            TransferTarget::Labeled { subjects, .. } => subjects.rows.len(),
            TransferTarget::Severity { scores, .. } => scores.len(),
        }
    }
}

/// One scored (target, cutoff) result row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferRow {
    pub target_name: String,
    pub cutoff: Option<i64>,
    pub n: usize,
    pub macro_f1: Option<f64>,
    pub auroc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub rows: Vec<TransferRow>,
    /// Degenerate-target warnings (single-class labels etc.); rows are still
    /// emitted so multi-target sweeps always complete.
    pub flags: Vec<String>,
}

/// Score every target under the frozen 0.5 rule; one row per (target, cutoff).
pub fn zero_shot_report(
    targets: &[TransferTarget],
    cutoffs: Option<&[i64]>,
) -> Result<TransferReport> {
    let mut rows = Vec::new();
    let mut flags = Vec::new();
    for target in targets {
        if target.n() < 2 {
            return Err(BgError::InvalidArg(format!(
                "target {} needs >= 2 subjects",
                target.name()
            )));
        }
        match target {
            TransferTarget::Labeled { name, subjects } => {
                let scores = subjects.scores();
                let labels = subjects.labels();
                rows.push(score_row(name, None, &scores, &labels, &mut flags)?);
            }
            TransferTarget::Severity { name, scores, severities, .. } => {
                let cutoffs = cutoffs.ok_or_else(|| {
                    BgError::InvalidArg(format!(
                        "target {name} carries severities; cutoffs must be given"
                    ))
                })?;
                if cutoffs.is_empty() {
                    return Err(BgError::InvalidArg("cutoff list is empty".into()));
                }
                for &cutoff in cutoffs {
                    let labels = binarize_severity(severities, cutoff)?;
                    rows.push(score_row(name, Some(cutoff), scores, &labels, &mut flags)?);
                }
            }
        }
    }
    Ok(TransferReport { rows, flags })
}

/// Predictions are computed from scores alone, before labels are consulted.
fn score_row(
    name: &str,
    cutoff: Option<i64>,
    scores: &[f64],
    labels: &[u8],
    flags: &mut Vec<String>,
) -> Result<TransferRow> {
    let preds = binarize_scores(scores, 0.5)?;
    let tag = match cutoff {
        Some(c) => format!("{name} (cutoff {c})"),
        None => name.to_string(),
    };

    let c = confusion(labels, &preds)?;
    let macro_f1 = match classification_metrics(&c) {
        Ok(m) => Some(m.macro_f1),
        Err(_) => {
            flags.push(format!("{tag}: single-class labels, macro-F1 undefined"));
            None
        }
    };
    let auroc_val = match auroc(&ScoredLabels::new(scores.to_vec(), labels.to_vec())?) {
        Ok(v) => Some(v),
        Err(_) => {
            flags.push(format!("{tag}: single-class labels, AUROC undefined"));
            None
        }
    };
    Ok(TransferRow {
        target_name: name.to_string(),
        cutoff,
        n: scores.len(),
        macro_f1,
        auroc: auroc_val,
    })
}
