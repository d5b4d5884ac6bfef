//! Strict-schema ingestion of prediction, severity, feature, and manifest
//! files; turn-to-subject pooling; subject-disjointness linting.
//!
//! CSV dialect: UTF-8, comma-delimited, dot decimal, mandatory header row.
//! JSONL files carry the identical key sets, one object per line.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use crate::error::{BgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(BgError::Schema(format!("unknown split value: {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Heavy,
    Neutral,
}

impl Band {
    pub fn parse(s: &str) -> Result<Band> {
        match s {
            "heavy" => Ok(Band::Heavy),
            "neutral" => Ok(Band::Neutral),
            other => Err(BgError::Schema(format!("unknown band value: {other:?}"))),
        }
    }
}

/// One prediction row: a subject score plus optional provenance keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub subject_id: String,
    pub label: u8,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modality: Option<String>,
}

impl PredictionRecord {
    fn validate(&self, row: usize) -> Result<()> {
        if self.subject_id.is_empty() {
            return Err(BgError::Load(format!("empty subject_id at row {row}")));
        }
        if self.label > 1 {
            return Err(BgError::Load(format!(
                "non-binary label at row {row}: {}",
                self.label
            )));
        }
        if !self.score.is_finite() || self.score < 0.0 || self.score > 1.0 {
            return Err(BgError::Load(format!(
                "score out of range at row {row}: {}",
                self.score
            )));
        }
        Ok(())
    }

    fn dedup_key(&self) -> (String, Option<String>, Option<String>, Option<i64>, Option<i64>, Option<Band>, Option<String>) {
        (
            self.subject_id.clone(),
            self.turn_id.clone(),
            self.config_id.clone(),
            self.seed,
            self.fold,
            self.band,
            self.modality.clone(),
        )
    }
}

/// Immutable, row-order-preserving prediction table.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    rows: Vec<PredictionRecord>,
}

impl PredictionTable {
    pub fn new(rows: Vec<PredictionRecord>) -> Result<Self> {
        Self::new_with_row_offset(rows, 1)
    }

    /// `row_offset` is the file row of the first record (2 for CSV, after
    /// the header) so diagnostics point at the real line.
    fn new_with_row_offset(rows: Vec<PredictionRecord>, row_offset: usize) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in rows.iter().enumerate() {
            r.validate(i + row_offset)?;
            if !seen.insert(r.dedup_key()) {
                return Err(BgError::Load(format!(
                    "duplicate key at row {} (subject {})",
                    i + row_offset,
                    r.subject_id
                )));
            }
        }
        Ok(PredictionTable { rows })
    }

    pub fn rows(&self) -> &[PredictionRecord] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Jsonl,
}

const PRED_COLUMNS: &[&str] = &[
    "subject_id",
    "label",
    "score",
    "turn_id",
    "config_id",
    "seed",
    "fold",
    "split",
    "band",
    "modality",
];

/// Load a prediction table, validating every row against the record schema.
pub fn load_predictions<R: Read>(source: R, format: FileFormat) -> Result<PredictionTable> {
    match format {
        FileFormat::Csv => load_predictions_csv(source),
        FileFormat::Jsonl => load_predictions_jsonl(source),
    }
}

fn opt_str(field: Option<&str>) -> Option<String> {
    match field {
        Some("") | None => None,
        Some(s) => Some(s.to_string()),
    }
}

fn load_predictions_csv<R: Read>(source: R) -> Result<PredictionTable> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| BgError::Load(format!("bad csv header: {e}")))?
        .clone();
    let idx: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    for required in ["subject_id", "label", "score"] {
        if !idx.contains_key(required) {
            return Err(BgError::Load(format!("missing column {required:?}")));
        }
    }
    for h in headers.iter() {
        if !PRED_COLUMNS.contains(&h) {
            return Err(BgError::Load(format!("unknown column {h:?}")));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after header
        let rec = rec.map_err(|e| BgError::Load(format!("csv parse error at row {row}: {e}")))?;
        let get = |name: &str| idx.get(name).and_then(|&j| rec.get(j));
        let label: u8 = get("label")
            .unwrap_or("")
            .parse()
            .map_err(|_| BgError::Load(format!("bad label at row {row}")))?;
        let score: f64 = get("score")
            .unwrap_or("")
            .parse()
            .map_err(|_| BgError::Load(format!("bad score at row {row}")))?;
        let parse_int = |name: &str| -> Result<Option<i64>> {
            match opt_str(get(name)) {
                None => Ok(None),
                Some(s) => s
                    .parse()
                    .map(Some)
                    .map_err(|_| BgError::Load(format!("bad {name} at row {row}"))),
            }
        };
        rows.push(PredictionRecord {
            subject_id: get("subject_id").unwrap_or("").to_string(),
            label,
            score,
            turn_id: opt_str(get("turn_id")),
            config_id: opt_str(get("config_id")),
            seed: parse_int("seed")?,
            fold: parse_int("fold")?,
            split: opt_str(get("split")).map(|s| Split::parse(&s)).transpose()?,
            band: opt_str(get("band")).map(|s| Band::parse(&s)).transpose()?,
            modality: opt_str(get("modality")),
        });
    }
    PredictionTable::new_with_row_offset(rows, 2)
}

fn load_predictions_jsonl<R: Read>(source: R) -> Result<PredictionTable> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let row = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(&line)
            .map_err(|e| BgError::Load(format!("jsonl parse error at row {row}: {e}")))?;
        rows.push(rec);
    }
    PredictionTable::new(rows)
}

/// Serialize a prediction table back to CSV (all columns, blanks for None).
pub fn write_predictions_csv<W: std::io::Write>(table: &PredictionTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PRED_COLUMNS)
        .map_err(|e| BgError::Load(e.to_string()))?;
    for r in table.rows() {
        let fields = [
            r.subject_id.clone(),
            r.label.to_string(),
            format_score(r.score),
            r.turn_id.clone().unwrap_or_default(),
            r.config_id.clone().unwrap_or_default(),
            r.seed.map(|v| v.to_string()).unwrap_or_default(),
            r.fold.map(|v| v.to_string()).unwrap_or_default(),
            r.split.map(|s| s.as_str().to_string()).unwrap_or_default(),
            r.band
                .map(|b| match b {
                    Band::Heavy => "heavy".to_string(),
                    Band::Neutral => "neutral".to_string(),
                })
                .unwrap_or_default(),
            r.modality.clone().unwrap_or_default(),
        ];
        w.write_record(&fields)
            .map_err(|e| BgError::Load(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn format_score(s: f64) -> String {
    // shortest round-trip representation keeps load -> write -> load exact
    let mut buf = ryu_like(s);
    if !buf.contains('.') && !buf.contains('e') {
        buf.push_str(".0");
    }
    buf
}

fn ryu_like(s: f64) -> String {
    format!("{s}")
}

/// One subject, one pooled score, one ground-truth label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectScore {
    pub subject_id: String,
    pub label: u8,
    pub score: f64,
}

/// Subject-level score table (one row per subject, sorted by subject_id).
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectTable {
    pub rows: Vec<SubjectScore>,
}

impl SubjectTable {
    pub fn scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.score).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }
}

/// Pool turn/question-level prediction rows to one score per subject by
/// arithmetic mean. The subject label is the unique row label; conflicting
/// labels within one subject are a hard integrity error.
pub fn pool_to_subject_scores(table: &PredictionTable) -> Result<SubjectTable> {
    let mut acc: BTreeMap<&str, (u8, f64, usize)> = BTreeMap::new();
    for r in table.rows() {
        match acc.get_mut(r.subject_id.as_str()) {
            None => {
                acc.insert(&r.subject_id, (r.label, r.score, 1));
            }
            Some((label, sum, n)) => {
                if *label != r.label {
                    return Err(BgError::Integrity(format!(
                        "conflicting labels for subject {}",
                        r.subject_id
                    )));
                }
                *sum += r.score;
                *n += 1;
            }
        }
    }
    Ok(SubjectTable {
        rows: acc
            .into_iter()
            .map(|(sid, (label, sum, n))| SubjectScore {
                subject_id: sid.to_string(),
                label,
                score: sum / n as f64,
            })
            .collect(),
    })
}

/// Turn-level feature row tagged with a modality block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub subject_id: String,
    pub turn_id: String,
    pub label: u8,
    pub modality_block: String,
    pub features: Vec<f64>,
}

/// Feature rows grouped per file; all rows of one block share dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    rows: Vec<FeatureRecord>,
}

impl FeatureTable {
    pub fn new(rows: Vec<FeatureRecord>) -> Result<Self> {
        let mut dims: HashMap<&str, usize> = HashMap::new();
        for (i, r) in rows.iter().enumerate() {
            if r.label > 1 {
                return Err(BgError::Schema(format!("non-binary label at row {}", i + 1)));
            }
            if r.features.iter().any(|v| !v.is_finite()) {
                return Err(BgError::Schema(format!("non-finite feature at row {}", i + 1)));
            }
            match dims.get(r.modality_block.as_str()) {
                None => {
                    dims.insert(&r.modality_block, r.features.len());
                }
                Some(&d) if d == r.features.len() => {}
                Some(&d) => {
                    return Err(BgError::Schema(format!(
                        "block {} dimensionality mismatch at row {}: {} vs {}",
                        r.modality_block,
                        i + 1,
                        r.features.len(),
                        d
                    )))
                }
            }
        }
        Ok(FeatureTable { rows })
    }

    pub fn rows(&self) -> &[FeatureRecord] {
        &self.rows
    }

    pub fn blocks(&self) -> BTreeSet<String> {
        self.rows.iter().map(|r| r.modality_block.clone()).collect()
    }

    pub fn subject_ids(&self) -> BTreeSet<String> {
        self.rows.iter().map(|r| r.subject_id.clone()).collect()
    }

    pub fn subject_label(&self, subject_id: &str) -> Result<u8> {
        let mut label = None;
        for r in &self.rows {
            if r.subject_id == subject_id {
                match label {
                    None => label = Some(r.label),
                    Some(l) if l == r.label => {}
                    Some(_) => {
                        return Err(BgError::Integrity(format!(
                            "conflicting labels for subject {subject_id}"
                        )))
                    }
                }
            }
        }
        label.ok_or_else(|| BgError::InvalidArg(format!("unknown subject {subject_id}")))
    }
}

/// features.csv: subject_id,turn_id,label,modality_block,f0..f{d-1}
pub fn load_features<R: Read>(source: R) -> Result<FeatureTable> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| BgError::Load(format!("bad csv header: {e}")))?
        .clone();
    let fixed = ["subject_id", "turn_id", "label", "modality_block"];
    for (i, name) in fixed.iter().enumerate() {
        if headers.get(i) != Some(name) {
            return Err(BgError::Load(format!("features file must start with columns {fixed:?}")));
        }
    }
    for (j, h) in headers.iter().enumerate().skip(fixed.len()) {
        let expect = format!("f{}", j - fixed.len());
        if h != expect {
            return Err(BgError::Load(format!("expected column {expect:?}, found {h:?}")));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| BgError::Load(format!("csv parse error at row {row}: {e}")))?;
        let label: u8 = rec
            .get(2)
            .unwrap_or("")
            .parse()
            .map_err(|_| BgError::Load(format!("bad label at row {row}")))?;
        // blocks of different dimensionality share one header; blank cells
        // pad the narrower blocks and are not part of the vector
        let features = rec
            .iter()
            .skip(fixed.len())
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| BgError::Load(format!("bad feature value at row {row}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(FeatureRecord {
            subject_id: rec.get(0).unwrap_or("").to_string(),
            turn_id: rec.get(1).unwrap_or("").to_string(),
            label,
            modality_block: rec.get(3).unwrap_or("").to_string(),
            features,
        });
    }
    FeatureTable::new(rows)
}

/// Write a feature table in the same schema `load_features` reads.
pub fn write_features_csv<W: std::io::Write>(table: &FeatureTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = table.rows().iter().map(|r| r.features.len()).max().unwrap_or(0);
    let mut header = vec![
        "subject_id".to_string(),
        "turn_id".to_string(),
        "label".to_string(),
        "modality_block".to_string(),
    ];
    for j in 0..dim {
        header.push(format!("f{j}"));
    }
    w.write_record(&header).map_err(|e| BgError::Load(e.to_string()))?;
    for r in table.rows() {
        let mut fields = vec![
            r.subject_id.clone(),
            r.turn_id.clone(),
            r.label.to_string(),
            r.modality_block.clone(),
        ];
        for j in 0..dim {
            fields.push(r.features.get(j).map(|v| format!("{v}")).unwrap_or_default());
        }
        w.write_record(&fields).map_err(|e| BgError::Load(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Pooling strategy for turn-to-subject aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooler {
    /// Per-dimension mean of feature vectors.
    Mean,
    /// Concatenated per-dimension mean and population std (divisor n);
    /// output dimensionality doubles.
    MeanStd,
}

impl Pooler {
    pub fn parse(s: &str) -> Result<Pooler> {
        match s {
            "mean" => Ok(Pooler::Mean),
            "meanstd" => Ok(Pooler::MeanStd),
            other => Err(BgError::InvalidArg(format!("unknown pooler: {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Pooler::Mean => "mean",
            Pooler::MeanStd => "meanstd",
        }
    }
}

/// Pool a set of turn vectors to one subject vector.
pub fn pool_vectors(turns: &[Vec<f64>], pooler: Pooler) -> Result<Vec<f64>> {
    if turns.is_empty() {
        return Err(BgError::InvalidArg("cannot pool zero turns".into()));
    }
    let d = turns[0].len();
    if turns.iter().any(|t| t.len() != d) {
        return Err(BgError::Schema("non-uniform dimensionality in pooled turns".into()));
    }
    let n = turns.len() as f64;
    let mut mean = vec![0.0; d];
    for t in turns {
        for (m, v) in mean.iter_mut().zip(t) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    match pooler {
        Pooler::Mean => Ok(mean),
        Pooler::MeanStd => {
            let mut var = vec![0.0; d];
            for t in turns {
                for ((v, m), acc) in t.iter().zip(&mean).zip(var.iter_mut()) {
                    let diff = v - m;
                    *acc += diff * diff;
                }
            }
            let mut out = mean;
            out.extend(var.into_iter().map(|v| (v / n).sqrt()));
            Ok(out)
        }
    }
}

/// One manifest entry assigning a subject to a split within a scope.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub split: Split,
    pub fold: Option<i64>,
    pub probe_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitManifest {
    pub entries: Vec<ManifestEntry>,
}

/// manifest.csv: subject_id,split[,fold,probe_id]
pub fn load_manifest<R: Read>(source: R) -> Result<SplitManifest> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| BgError::Load(format!("bad csv header: {e}")))?
        .clone();
    let idx: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    for required in ["subject_id", "split"] {
        if !idx.contains_key(required) {
            return Err(BgError::Load(format!("missing column {required:?}")));
        }
    }
    let mut entries = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| BgError::Load(format!("csv parse error at row {row}: {e}")))?;
        let get = |name: &str| idx.get(name).and_then(|&j| rec.get(j));
        let fold = match opt_str(get("fold")) {
            None => None,
            Some(s) => Some(
                s.parse()
                    .map_err(|_| BgError::Load(format!("bad fold at row {row}")))?,
            ),
        };
        entries.push(ManifestEntry {
            subject_id: get("subject_id").unwrap_or("").to_string(),
            split: Split::parse(get("split").unwrap_or(""))?,
            fold,
            probe_id: opt_str(get("probe_id")),
        });
    }
    Ok(SplitManifest { entries })
}

/// One lint finding: which rule fired, for which subject, where.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LintViolation {
    pub rule_id: String,
    pub subject_id: String,
    pub locations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LintReport {
    pub violations: Vec<LintViolation>,
    pub clean: bool,
}

/// Subject-disjointness lint.
///
/// Rules:
/// * `subject_overlap` — a subject sits in both train and test of one
///   (probe_id, fold) scope;
/// * `label_conflict` — one subject_id carries multiple labels in the
///   prediction table;
/// * `turn_leak` — turn rows of one subject land on both sides of a
///   train/test boundary in the prediction table.
pub fn lint_subject_disjoint(
    manifest: &SplitManifest,
    predictions: Option<&PredictionTable>,
) -> LintReport {
    let mut violations = Vec::new();

    // (probe, fold) scope -> subject -> set of splits
    let mut scopes: BTreeMap<(Option<String>, Option<i64>), BTreeMap<&str, BTreeSet<Split>>> =
        BTreeMap::new();
    for e in &manifest.entries {
        scopes
            .entry((e.probe_id.clone(), e.fold))
            .or_default()
            .entry(&e.subject_id)
            .or_default()
            .insert(e.split);
    }
    for ((probe, fold), subjects) in &scopes {
        for (sid, splits) in subjects {
            if splits.contains(&Split::Train) && splits.contains(&Split::Test) {
                let mut loc = String::new();
                if let Some(p) = probe {
                    loc.push_str(&format!("probe {p} "));
                }
                if let Some(f) = fold {
                    loc.push_str(&format!("fold {f} "));
                }
                loc.push_str("train+test");
                violations.push(LintViolation {
                    rule_id: "subject_overlap".into(),
                    subject_id: sid.to_string(),
                    locations: vec![loc],
                });
            }
        }
    }

    if let Some(table) = predictions {
        let mut labels: BTreeMap<&str, BTreeSet<u8>> = BTreeMap::new();
        let mut turn_splits: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
        for r in table.rows() {
            labels.entry(&r.subject_id).or_default().insert(r.label);
            if let (Some(split), Some(_)) = (r.split, r.turn_id.as_ref()) {
                turn_splits.entry(&r.subject_id).or_default().insert(split);
            }
        }
        for (sid, ls) in &labels {
            if ls.len() > 1 {
                violations.push(LintViolation {
                    rule_id: "label_conflict".into(),
                    subject_id: sid.to_string(),
                    locations: vec!["predictions".into()],
                });
            }
        }
        for (sid, splits) in &turn_splits {
            if splits.contains(&Split::Train) && splits.contains(&Split::Test) {
                violations.push(LintViolation {
                    rule_id: "turn_leak".into(),
                    subject_id: sid.to_string(),
                    locations: vec!["predictions turn rows span train and test".into()],
                });
            }
        }
    }

    let clean = violations.is_empty();
    LintReport { violations, clean }
}

/// Binary label per severity score: `1` iff `severity >= cutoff`.
pub fn binarize_severity(severities: &[i64], cutoff: i64) -> Result<Vec<u8>> {
    for (i, &s) in severities.iter().enumerate() {
        if s < 0 {
            return Err(BgError::Schema(format!("negative severity at row {}: {s}", i + 1)));
        }
    }
    Ok(severities.iter().map(|&s| u8::from(s >= cutoff)).collect())
}

/// severity.csv: subject_id,severity
pub fn load_severities<R: Read>(source: R) -> Result<BTreeMap<String, i64>> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| BgError::Load(format!("bad csv header: {e}")))?
        .clone();
    if headers.get(0) != Some("subject_id") || headers.get(1) != Some("severity") {
        return Err(BgError::Load("severity file needs columns subject_id,severity".into()));
    }
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| BgError::Load(format!("csv parse error at row {row}: {e}")))?;
        let sid = rec.get(0).unwrap_or("").to_string();
        let sev: i64 = rec
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| BgError::Load(format!("bad severity at row {row}")))?;
        if sev < 0 {
            return Err(BgError::Schema(format!("negative severity at row {row}")));
        }
        if out.insert(sid.clone(), sev).is_some() {
            return Err(BgError::Load(format!("duplicate subject {sid} at row {row}")));
        }
    }
    Ok(out)
}
