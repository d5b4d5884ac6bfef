//! Paired symptom-density stress testing.
//!
//! Builds per-participant heavy/neutral slice pairs from chunk annotations,
//! estimates the paired heavy-minus-neutral shift by participant bootstrap,
//! tests the paired gap with a sign-flip permutation test, and summarizes
//! across seeds.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BgError, Result};
use crate::rankaudit::percentile;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Speaker {
    Participant,
    Interviewer,
}

impl Speaker {
    pub fn parse(s: &str) -> Result<Speaker> {
        match s {
            "participant" => Ok(Speaker::Participant),
            "interviewer" => Ok(Speaker::Interviewer),
            other => Err(BgError::Schema(format!("unknown speaker value: {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfRelevance {
    Self_,
    Other,
    Generic,
    Negated,
}

impl SelfRelevance {
    pub fn parse(s: &str) -> Result<SelfRelevance> {
        match s {
            "self" => Ok(SelfRelevance::Self_),
            "other" => Ok(SelfRelevance::Other),
            "generic" => Ok(SelfRelevance::Generic),
            "negated" => Ok(SelfRelevance::Negated),
            other => Err(BgError::Schema(format!("unknown self_relevance value: {other:?}"))),
        }
    }
}

/// One annotated interview chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkAnnotation {
    pub subject_id: String,
    pub chunk_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub speaker: Speaker,
    pub topic_score: u8,
    pub self_relevance: SelfRelevance,
    pub confidence: f64,
}

impl ChunkAnnotation {
    fn validate(&self, row: usize) -> Result<()> {
        if !(self.start_s >= 0.0 && self.end_s > self.start_s) {
            return Err(BgError::Schema(format!(
                "bad chunk interval at row {row}: [{}, {}]",
                self.start_s, self.end_s
            )));
        }
        if self.topic_score > 3 {
            return Err(BgError::Schema(format!(
                "topic_score out of 0..3 at row {row}: {}",
                self.topic_score
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(BgError::Schema(format!(
                "confidence out of [0,1] at row {row}: {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// annotations.csv:
/// subject_id,chunk_id,start_s,end_s,speaker,topic_score,self_relevance,confidence
pub fn load_annotations<R: Read>(source: R) -> Result<Vec<ChunkAnnotation>> {
    let mut reader = csv::Reader::from_reader(source);
    let expected = [
        "subject_id",
        "chunk_id",
        "start_s",
        "end_s",
        "speaker",
        "topic_score",
        "self_relevance",
        "confidence",
    ];
    let headers = reader
        .headers()
        .map_err(|e| BgError::Load(format!("bad csv header: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(BgError::Load(format!("annotations file needs columns {expected:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| BgError::Load(format!("csv parse error at row {row}: {e}")))?;
        let f = |j: usize| rec.get(j).unwrap_or("");
        let ann = ChunkAnnotation {
            subject_id: f(0).to_string(),
            chunk_id: f(1).to_string(),
            start_s: f(2)
                .parse()
                .map_err(|_| BgError::Load(format!("bad start_s at row {row}")))?,
            end_s: f(3)
                .parse()
                .map_err(|_| BgError::Load(format!("bad end_s at row {row}")))?,
            speaker: Speaker::parse(f(4))?,
            topic_score: f(5)
                .parse()
                .map_err(|_| BgError::Load(format!("bad topic_score at row {row}")))?,
            self_relevance: SelfRelevance::parse(f(6))?,
            confidence: f(7)
                .parse()
                .map_err(|_| BgError::Load(format!("bad confidence at row {row}")))?,
        };
        ann.validate(row)?;
        out.push(ann);
    }
    Ok(out)
}

/// Topic-score to band mapping plus optional filters.
#[derive(Debug, Clone)]
pub struct BandRules {
    pub heavy: BTreeSet<u8>,
    pub neutral: BTreeSet<u8>,
    /// Bookkeeping-only scores; contribute to neither band.
    pub mid: BTreeSet<u8>,
    /// When set, only chunks with these self_relevance values count.
    pub self_relevance_filter: Option<Vec<SelfRelevance>>,
    /// When set, chunks below this confidence are ignored.
    pub min_confidence: Option<f64>,
    /// Participant-speech floor per band, in seconds.
    pub min_speech_s: f64,
}

impl Default for BandRules {
    fn default() -> Self {
        BandRules {
            heavy: BTreeSet::from([2, 3]),
            neutral: BTreeSet::from([0]),
            mid: BTreeSet::from([1]),
            self_relevance_filter: None,
            min_confidence: None,
            min_speech_s: 10.0,
        }
    }
}

/// One retained participant pair with its speech-duration bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlicePair {
    pub subject_id: String,
    pub heavy_chunks: Vec<String>,
    pub neutral_chunks: Vec<String>,
    pub heavy_speech_s: f64,
    pub neutral_speech_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedSliceSet {
    pub pairs: Vec<SlicePair>,
    pub dropped: Vec<(String, String)>, // (subject_id, reason)
}

/// Build per-participant heavy/neutral slice pairs.
///
/// Mid-band chunks are discarded; only participant-speaker chunks count
/// toward band durations; each band needs at least `min_speech_s` seconds of
/// participant speech, otherwise the subject is dropped with a reason.
pub fn build_paired_slices(
    annotations: &[ChunkAnnotation],
    rules: &BandRules,
) -> Result<PairedSliceSet> {
    let mut by_subject: BTreeMap<&str, Vec<&ChunkAnnotation>> = BTreeMap::new();
    for ann in annotations {
        by_subject.entry(&ann.subject_id).or_default().push(ann);
    }

    let mut pairs = Vec::new();
    let mut dropped = Vec::new();
    for (subject, chunks) in &by_subject {
        // overlap check on the subject's timeline
        let mut sorted: Vec<&&ChunkAnnotation> = chunks.iter().collect();
        sorted.sort_by(|a, b| a.start_s.partial_cmp(&b.start_s).unwrap());
        for w in sorted.windows(2) {
            if w[1].start_s < w[0].end_s {
                return Err(BgError::Integrity(format!(
                    "overlapping chunks for subject {subject}: {} and {}",
                    w[0].chunk_id, w[1].chunk_id
                )));
            }
        }

        let mut heavy_chunks = Vec::new();
        let mut neutral_chunks = Vec::new();
        let mut heavy_s = 0.0;
        let mut neutral_s = 0.0;
        for ann in chunks {
            if ann.speaker != Speaker::Participant {
                continue;
            }
            if let Some(filter) = &rules.self_relevance_filter {
                if !filter.contains(&ann.self_relevance) {
                    continue;
                }
            }
            if let Some(min_conf) = rules.min_confidence {
                if ann.confidence < min_conf {
                    continue;
                }
            }
            let dur = ann.end_s - ann.start_s;
            if rules.heavy.contains(&ann.topic_score) {
                heavy_chunks.push(ann.chunk_id.clone());
                heavy_s += dur;
            } else if rules.neutral.contains(&ann.topic_score) {
                neutral_chunks.push(ann.chunk_id.clone());
                neutral_s += dur;
            }
            // mid scores fall through: bookkeeping only
        }

        if heavy_s < rules.min_speech_s {
            dropped.push((
                subject.to_string(),
                format!("heavy_under_{}s", rules.min_speech_s),
            ));
        } else if neutral_s < rules.min_speech_s {
            dropped.push((
                subject.to_string(),
                format!("neutral_under_{}s", rules.min_speech_s),
            ));
        } else {
            pairs.push(SlicePair {
                subject_id: subject.to_string(),
                heavy_chunks,
                neutral_chunks,
                heavy_speech_s: heavy_s,
                neutral_speech_s: neutral_s,
            });
        }
    }
    Ok(PairedSliceSet { pairs, dropped })
}

/// Per-participant heavy-minus-neutral score difference.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDelta {
    pub subject_id: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// Paired participant-level bootstrap of the mean shift, percentile 95% CI.
pub fn paired_shift(deltas: &[PairedDelta], replicates: usize, seed: u64) -> Result<ShiftEstimate> {
    if deltas.len() < 2 {
        return Err(BgError::InvalidArg(format!(
            "paired_shift needs >= 2 deltas, got {}",
            deltas.len()
        )));
    }
    if replicates < 1 {
        return Err(BgError::InvalidArg("replicates must be >= 1".into()));
    }
    for d in deltas {
        if !(-1.0..=1.0).contains(&d.delta) {
            return Err(BgError::Schema(format!(
                "delta out of [-1,1] for subject {}: {}",
                d.subject_id, d.delta
            )));
        }
    }
    let values: Vec<f64> = deltas.iter().map(|d| d.delta).collect();
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;

    let mut means: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r);
            let sum: f64 = (0..n).map(|_| values[rng.gen_range(0..n)]).sum();
            sum / n as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ShiftEstimate {
        mean,
        ci_low: percentile(&means, 2.5),
        ci_high: percentile(&means, 97.5),
        replicates,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sided {
    One,
    Two,
}

impl Sided {
    fn extreme(&self, stat: f64, observed: f64) -> bool {
        match self {
            Sided::One => stat >= observed,
            Sided::Two => stat.abs() >= observed.abs(),
        }
    }
}

/// Monte Carlo sign-flip permutation test of the mean gap.
///
/// Each assignment flips each gap's sign independently with probability 1/2;
/// `p = (extreme + 1) / (assignments + 1)`, floored at `1/(assignments+1)`.
pub fn signflip_gap_test(
    gaps: &[f64],
    assignments: usize,
    seed: u64,
    sided: Sided,
) -> Result<(f64, f64)> {
    if gaps.len() < 2 {
        return Err(BgError::InvalidArg(format!("need >= 2 gaps, got {}", gaps.len())));
    }
    if assignments < 1 {
        return Err(BgError::InvalidArg("assignments must be >= 1".into()));
    }
    let n = gaps.len();
    let observed = gaps.iter().sum::<f64>() / n as f64;
    let extreme: usize = (0..assignments as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r);
            let stat = gaps
                .iter()
                .map(|&g| if rng.gen::<bool>() { g } else { -g })
                .sum::<f64>()
                / n as f64;
            usize::from(sided.extreme(stat, observed))
        })
        .sum();
    let p = (extreme + 1) as f64 / (assignments + 1) as f64;
    Ok((p, observed))
}

/// Exhaustive sign-flip test over all 2^n assignments (n <= 20).
///
/// `p = extreme / 2^n`; the identity assignment guarantees `p >= 2^-n`.
pub fn signflip_gap_test_exhaustive(gaps: &[f64], sided: Sided) -> Result<(f64, f64)> {
    let n = gaps.len();
    if n < 2 {
        return Err(BgError::InvalidArg(format!("need >= 2 gaps, got {n}")));
    }
    if n > 20 {
        return Err(BgError::InvalidArg(format!(
            "exhaustive mode limited to 20 gaps, got {n}"
        )));
    }
    let observed = gaps.iter().sum::<f64>() / n as f64;
    let total = 1usize << n;
    let extreme = (0..total)
        .filter(|&mask| {
            let stat = gaps
                .iter()
                .enumerate()
                .map(|(i, &g)| if mask & (1 << i) != 0 { -g } else { g })
                .sum::<f64>()
                / n as f64;
            sided.extreme(stat, observed)
        })
        .count();
    Ok((extreme as f64 / total as f64, observed))
}

/// One seed's stress-test outcome for summarization.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    /// modality -> bootstrap shift estimate
    pub shifts: BTreeMap<String, ShiftEstimate>,
    pub gap_mean: f64,
    pub gap_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalitySummary {
    pub mean_shift: f64,
    pub seed_sd: f64,
    /// Mean of per-seed CI endpoints.
    pub ci_low: f64,
    pub ci_high: f64,
    pub seeds_positive: usize,
    pub seeds_ci_excluding_zero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub mean: f64,
    pub seed_sd: f64,
    pub seeds_positive: usize,
    pub per_seed_p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressSummary {
    pub seeds: Vec<u64>,
    pub per_modality: BTreeMap<String, ModalitySummary>,
    pub gap: GapSummary,
}

fn sample_sd(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64)
        .sqrt()
}

/// Aggregate per-seed shift/gap results into a cross-seed summary.
pub fn multiseed_summary(per_seed: &[SeedResult]) -> Result<StressSummary> {
    if per_seed.is_empty() {
        return Err(BgError::InvalidArg("need >= 1 seed result".into()));
    }
    let modalities: BTreeSet<&String> = per_seed[0].shifts.keys().collect();
    for s in per_seed {
        if s.shifts.keys().collect::<BTreeSet<_>>() != modalities {
            return Err(BgError::Schema("inconsistent modality sets across seeds".into()));
        }
    }

    let mut per_modality = BTreeMap::new();
    for modality in modalities {
        let estimates: Vec<&ShiftEstimate> =
            per_seed.iter().map(|s| &s.shifts[modality]).collect();
        let means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
        let mean_shift = means.iter().sum::<f64>() / means.len() as f64;
        per_modality.insert(
            modality.clone(),
            ModalitySummary {
                mean_shift,
                seed_sd: sample_sd(&means, mean_shift),
                ci_low: estimates.iter().map(|e| e.ci_low).sum::<f64>() / estimates.len() as f64,
                ci_high: estimates.iter().map(|e| e.ci_high).sum::<f64>() / estimates.len() as f64,
                seeds_positive: means.iter().filter(|&&m| m > 0.0).count(),
                seeds_ci_excluding_zero: estimates
                    .iter()
                    .filter(|e| e.ci_low > 0.0 || e.ci_high < 0.0)
                    .count(),
            },
        );
    }

    let gap_means: Vec<f64> = per_seed.iter().map(|s| s.gap_mean).collect();
    let gap_mean = gap_means.iter().sum::<f64>() / gap_means.len() as f64;
    Ok(StressSummary {
        seeds: per_seed.iter().map(|s| s.seed).collect(),
        per_modality,
        gap: GapSummary {
            mean: gap_mean,
            seed_sd: sample_sd(&gap_means, gap_mean),
            seeds_positive: gap_means.iter().filter(|&&m| m > 0.0).count(),
            per_seed_p: per_seed.iter().map(|s| s.gap_p).collect(),
        },
    })
}
