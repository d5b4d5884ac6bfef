//! Subject-level classification metrics.
//!
//! Threshold-free metrics (AUROC, average precision) use exact tie handling:
//! AUROC counts positive-negative pairs with ties worth 0.5 (Mann-Whitney
//! convention); AP processes tied-score blocks atomically so the result is
//! independent of input row order. Thresholded metrics derive from a
//! [`ConfusionCounts`] partition. Undefined metrics are errors, never
//! sentinel zeros.

use crate::error::{BgError, Result};

/// TN/FP/FN/TP counts at subject level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConfusionCounts {
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tp += other.tp;
    }
}

/// Aligned score/label vectors; scores in [0,1], labels binary.
#[derive(Debug, Clone)]
pub struct ScoredLabels {
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl ScoredLabels {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(BgError::Schema(format!(
                "scores/labels length mismatch: {} vs {}",
                scores.len(),
                labels.len()
            )));
        }
        for (i, s) in scores.iter().enumerate() {
            if !s.is_finite() || *s < 0.0 || *s > 1.0 {
                return Err(BgError::Schema(format!("score out of range at row {i}: {s}")));
            }
        }
        for (i, l) in labels.iter().enumerate() {
            if *l > 1 {
                return Err(BgError::Schema(format!("non-binary label at row {i}: {l}")));
            }
        }
        Ok(ScoredLabels { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Thresholded metric set; `macro_f1 = (f1_pos + f1_neg) / 2` exactly.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MetricBundle {
    pub macro_f1: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub f1_pos: f64,
    pub f1_neg: f64,
}

/// Tally predictions against labels.
pub fn confusion(labels: &[u8], preds: &[u8]) -> Result<ConfusionCounts> {
    if labels.is_empty() || labels.len() != preds.len() {
        return Err(BgError::Schema(format!(
            "confusion needs equal non-empty inputs, got {} labels and {} preds",
            labels.len(),
            preds.len()
        )));
    }
    let mut c = ConfusionCounts { tn: 0, fp: 0, fn_: 0, tp: 0 };
    for (i, (&y, &p)) in labels.iter().zip(preds).enumerate() {
        match (y, p) {
            (0, 0) => c.tn += 1,
            (0, 1) => c.fp += 1,
            (1, 0) => c.fn_ += 1,
            (1, 1) => c.tp += 1,
            _ => {
                return Err(BgError::Schema(format!(
                    "non-binary value at row {i}: label {y}, pred {p}"
                )))
            }
        }
    }
    Ok(c)
}

/// Derive the thresholded metric bundle from confusion counts.
///
/// Requires at least one row in each true class; an empty class makes
/// balanced accuracy (and hence macro-F1) undefined.
pub fn classification_metrics(c: &ConfusionCounts) -> Result<MetricBundle> {
    let pos = c.tp + c.fn_;
    let neg = c.tn + c.fp;
    if pos == 0 {
        return Err(BgError::UndefinedMetric("no true positive-class rows".into()));
    }
    if neg == 0 {
        return Err(BgError::UndefinedMetric("no true negative-class rows".into()));
    }
    let (tn, fp, fn_, tp) = (c.tn as f64, c.fp as f64, c.fn_ as f64, c.tp as f64);
    // Denominators are >= class size, so never zero given both classes.
    let f1_pos = 2.0 * tp / (2.0 * tp + fp + fn_);
    let f1_neg = 2.0 * tn / (2.0 * tn + fn_ + fp);
    Ok(MetricBundle {
        macro_f1: (f1_pos + f1_neg) / 2.0,
        accuracy: (tp + tn) / c.total() as f64,
        balanced_accuracy: (tp / pos as f64 + tn / neg as f64) / 2.0,
        f1_pos,
        f1_neg,
    })
}

/// Macro-F1 of `scores` binarized at `threshold`, given both true classes.
///
/// Convenience used by cutoff selection and bootstrap ranking; same formula
/// as [`classification_metrics`] without building the full bundle.
pub fn macro_f1_at(scores: &[f64], labels: &[u8], threshold: f64) -> Result<f64> {
    let preds = binarize_scores(scores, threshold)?;
    let c = confusion(labels, &preds)?;
    Ok(classification_metrics(&c)?.macro_f1)
}

/// Area under the ROC curve via exact pair counting over tie groups.
///
/// Equals `(wins + 0.5 * ties) / (P * N)` over all positive-negative pairs.
pub fn auroc(data: &ScoredLabels) -> Result<f64> {
    let p = data.labels().iter().filter(|&&l| l == 1).count();
    let n = data.len() - p;
    if p == 0 || n == 0 {
        return Err(BgError::UndefinedMetric(
            "auroc needs both classes present".into(),
        ));
    }
    let mut rows: Vec<(f64, u8)> = data
        .scores()
        .iter()
        .copied()
        .zip(data.labels().iter().copied())
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut wins = 0.0_f64; // positive strictly above negative
    let mut tie_pairs = 0.0_f64;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        let mut grp_pos = 0usize;
        let mut grp_neg = 0usize;
        while j < rows.len() && rows[j].0 == rows[i].0 {
            if rows[j].1 == 1 {
                grp_pos += 1;
            } else {
                grp_neg += 1;
            }
            j += 1;
        }
        wins += (grp_pos * neg_below) as f64;
        tie_pairs += (grp_pos * grp_neg) as f64;
        neg_below += grp_neg;
        i = j;
    }
    Ok((wins + 0.5 * tie_pairs) / (p * n) as f64)
}

/// Average precision over descending-score tie blocks.
///
/// `AP = sum over blocks of (block recall gain) * (precision at block end)`;
/// a block is a maximal run of equal scores, processed atomically.
pub fn average_precision(data: &ScoredLabels) -> Result<f64> {
    let p = data.labels().iter().filter(|&&l| l == 1).count();
    if p == 0 {
        return Err(BgError::UndefinedMetric("average_precision needs >= 1 positive".into()));
    }
    let mut rows: Vec<(f64, u8)> = data
        .scores()
        .iter()
        .copied()
        .zip(data.labels().iter().copied())
        .collect();
    rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut ap = 0.0;
    let mut tp_cum = 0usize;
    let mut seen = 0usize;
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        let mut block_tp = 0usize;
        while j < rows.len() && rows[j].0 == rows[i].0 {
            if rows[j].1 == 1 {
                block_tp += 1;
            }
            j += 1;
        }
        tp_cum += block_tp;
        seen += j - i;
        if block_tp > 0 {
            let precision = tp_cum as f64 / seen as f64;
            ap += (block_tp as f64 / p as f64) * precision;
        }
        i = j;
    }
    Ok(ap)
}

/// `1` iff `score >= threshold` (closed at the threshold).
pub fn binarize_scores(scores: &[f64], threshold: f64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(BgError::InvalidArg(format!("threshold out of [0,1]: {threshold}")));
    }
    Ok(scores.iter().map(|&s| u8::from(s >= threshold)).collect())
}
