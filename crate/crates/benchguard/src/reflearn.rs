//! Reference learner stack: pooling, PCA, L2-regularized logistic
//! regression, a stratified-CV sweep runner, and a synthetic-corpus
//! generator for desk-scale end-to-end runs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::{pool_vectors, FeatureRecord, FeatureTable, Pooler};
use crate::error::{BgError, Result};
use crate::metrics::macro_f1_at;
use crate::rng::substream;

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// k orthonormal rows, variance-descending.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

/// Fit top-k principal directions via the covariance eigendecomposition.
///
/// Sign convention: each component's largest-magnitude entry is positive,
/// so the decomposition is reproducible across runs.
pub fn pca_fit(x: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = x.len();
    if n < 2 {
        return Err(BgError::InvalidArg(format!("pca needs >= 2 rows, got {n}")));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(BgError::Schema("pca rows must share dimensionality".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BgError::Schema("pca input contains non-finite values".into()));
    }
    if k == 0 || k > d.min(n - 1) {
        return Err(BgError::InvalidArg(format!(
            "pca k out of range: k={k}, limit min(n-1, d)={}",
            d.min(n - 1)
        )));
    }

    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let centered = DMatrix::from_fn(n, d, |i, j| x[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = cov
        .try_symmetric_eigen(1e-10, 10_000)
        .ok_or_else(|| BgError::InvalidArg("pca eigendecomposition did not converge".into()))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let col = eig.eigenvectors.column(idx);
        let mut comp: Vec<f64> = col.iter().copied().collect();
        let pivot = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if comp[pivot] < 0.0 {
            for v in &mut comp {
                *v = -*v;
            }
        }
        components.push(comp);
        explained_variance.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaModel { mean, components, explained_variance })
}

impl PcaModel {
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((ci, xi), mi)| ci * (xi - mi)).sum())
            .collect()
    }

    pub fn reconstruct(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (zi, comp) in z.iter().zip(&self.components) {
            for (o, c) in out.iter_mut().zip(comp) {
                *o += zi * c;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LogregModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl LogregModel {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let z = self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        sigmoid(z)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `sum_i log(1 + exp(-y~_i (w.x_i + b))) + |w|^2 / (2c)`, bias unregularized.
pub fn logreg_objective(x: &[Vec<f64>], y: &[u8], c: f64, w: &[f64], b: f64) -> f64 {
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
        let signed = if label == 1 { z } else { -z };
        loss += log1p_exp(-signed);
    }
    loss + w.iter().map(|wi| wi * wi).sum::<f64>() / (2.0 * c)
}

/// Analytic gradient of [`logreg_objective`]; returns (d/dw, d/db).
pub fn logreg_gradient(x: &[Vec<f64>], y: &[u8], c: f64, w: &[f64], b: f64) -> (Vec<f64>, f64) {
    let d = w.len();
    let mut gw = vec![0.0; d];
    let mut gb = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
        let resid = sigmoid(z) - label as f64;
        for (g, xi) in gw.iter_mut().zip(row) {
            *g += resid * xi;
        }
        gb += resid;
    }
    for (g, wi) in gw.iter_mut().zip(w) {
        *g += wi / c;
    }
    (gw, gb)
}

/// Train by damped Newton iteration to gradient norm <= 1e-8 (max 1000
/// steps). The objective is strictly convex in `w` (ridge term) and convex
/// in `b`, so the optimum is unique whenever both classes are present.
pub fn logreg_train(x: &[Vec<f64>], y: &[u8], c: f64) -> Result<LogregModel> {
    if c <= 0.0 || !c.is_finite() {
        return Err(BgError::InvalidArg(format!("c must be positive, got {c}")));
    }
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(BgError::Schema(format!(
            "logreg needs equal non-empty x/y, got {} rows and {} labels",
            n,
            y.len()
        )));
    }
    if !y.contains(&0) || !y.contains(&1) {
        return Err(BgError::InvalidArg("logreg needs both classes present".into()));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(BgError::Schema("logreg rows must share dimensionality".into()));
    }

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut objective = logreg_objective(x, y, c, &w, b);
    for _ in 0..1000 {
        let (gw, gb) = logreg_gradient(x, y, c, &w, b);
        let grad_norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if grad_norm <= 1e-8 {
            break;
        }

        // Hessian over (w, b), bias as last coordinate, ridge on w only
        let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
        for row in x.iter() {
            let z = w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            let p = sigmoid(z);
            let s = (p * (1.0 - p)).max(1e-12);
            for i in 0..d {
                for j in i..d {
                    h[(i, j)] += s * row[i] * row[j];
                }
                h[(i, d)] += s * row[i];
            }
            h[(d, d)] += s;
        }
        for i in 0..d {
            h[(i, i)] += 1.0 / c;
            for j in (i + 1)..d {
                h[(j, i)] = h[(i, j)];
            }
            h[(d, i)] = h[(i, d)];
        }

        let mut g = DVector::<f64>::zeros(d + 1);
        for (i, gi) in gw.iter().enumerate() {
            g[i] = *gi;
        }
        g[d] = gb;

        let step = match h.clone().cholesky() {
            Some(chol) => chol.solve(&g),
            None => {
                for i in 0..=d {
                    h[(i, i)] += 1e-8;
                }
                h.cholesky()
                    .ok_or_else(|| BgError::InvalidArg("logreg hessian not positive definite".into()))?
                    .solve(&g)
            }
        };

        // backtracking line search on the Newton direction
        let mut t = 1.0;
        loop {
            let w_new: Vec<f64> = w.iter().enumerate().map(|(i, wi)| wi - t * step[i]).collect();
            let b_new = b - t * step[d];
            let obj_new = logreg_objective(x, y, c, &w_new, b_new);
            if obj_new <= objective || t < 1e-12 {
                w = w_new;
                b = b_new;
                objective = obj_new;
                break;
            }
            t *= 0.5;
        }
    }
    Ok(LogregModel { weights: w, bias: b, c })
}

// ---------------------------------------------------------------------------
// Pluggable learner contract
// ---------------------------------------------------------------------------

/// A trained scorer: subject feature vector in, probability out.
pub type Scorer = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Learner contract for the sweep: train on (X, y), return a scorer.
///
/// Only the PCA + logistic-regression family ships; the other leaderboard
/// learner names (linsvc, extratrees, histgb, mlp) are recognized by the
/// grammar but must be provided by the caller through this trait.
pub trait Learner: Send + Sync {
    fn name(&self) -> &str;
    fn train(&self, x: &[Vec<f64>], y: &[u8]) -> Result<Scorer>;
}

/// `logreg_pca{K}_c{C}` reference learner. K is the PCA dimensionality
/// (clamped to the training data's rank limit); `c01` means C=0.1, `c1`
/// means C=1.
pub struct LogregPcaLearner {
    name: String,
    pub pca_k: usize,
    pub c: f64,
}

impl Learner for LogregPcaLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn train(&self, x: &[Vec<f64>], y: &[u8]) -> Result<Scorer> {
        let n = x.len();
        if n < 2 {
            return Err(BgError::InvalidArg("learner needs >= 2 training rows".into()));
        }
        let d = x[0].len();
        let k = self.pca_k.min(d).min(n - 1);
        let pca = pca_fit(x, k)?;
        let projected: Vec<Vec<f64>> = x.iter().map(|r| pca.transform(r)).collect();
        let model = logreg_train(&projected, y, self.c)?;
        Ok(Box::new(move |features: &[f64]| model.predict_proba(&pca.transform(features))))
    }
}

/// Parse a learner name. Only `logreg_pca{K}_c{C}` is
/// buildable here; other known names yield a descriptive error.
pub fn parse_learner(name: &str) -> Result<Box<dyn Learner>> {
    if let Some(rest) = name.strip_prefix("logreg_pca") {
        let (k_str, c_str) = rest
            .split_once("_c")
            .ok_or_else(|| BgError::InvalidArg(format!("bad learner name: {name:?}")))?;
        let pca_k: usize = k_str
            .parse()
            .map_err(|_| BgError::InvalidArg(format!("bad PCA dimensionality in {name:?}")))?;
        let c = parse_c_token(c_str)
            .ok_or_else(|| BgError::InvalidArg(format!("bad C token in {name:?}")))?;
        return Ok(Box::new(LogregPcaLearner { name: name.to_string(), pca_k, c }));
    }
    let known_external = ["linsvc_", "extratrees_", "histgb_", "mlp_"];
    if known_external.iter().any(|p| name.starts_with(p)) {
        return Err(BgError::InvalidArg(format!(
            "learner {name:?} is not shipped; plug it in via the Learner trait"
        )));
    }
    Err(BgError::InvalidArg(format!("unknown learner name: {name:?}")))
}

/// `c01` -> 0.1, `c1` -> 1, `c025` -> 0.25 (leading zero means "0.").
fn parse_c_token(token: &str) -> Option<f64> {
    if token.is_empty() || !token.chars().all(|ch| ch.is_ascii_digit()) {
        return None;
    }
    let value = if let Some(frac) = token.strip_prefix('0') {
        if frac.is_empty() {
            return None;
        }
        format!("0.{frac}").parse().ok()?
    } else {
        token.parse::<f64>().ok()?
    };
    (value > 0.0).then_some(value)
}

// ---------------------------------------------------------------------------
// Stratified folds
// ---------------------------------------------------------------------------

/// Assign each row a fold in 0..k: within each class, a seeded shuffle then
/// round-robin deal, so per-class fold sizes differ by at most one.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(BgError::InvalidArg(format!("k must be >= 2, got {k}")));
    }
    for class in [0u8, 1] {
        let count = labels.iter().filter(|&&l| l == class).count();
        if count < k {
            return Err(BgError::InvalidArg(format!(
                "class {class} has {count} members, fewer than k={k}"
            )));
        }
    }
    let mut assignment = vec![0usize; labels.len()];
    for class in [0u8, 1] {
        let mut indices: Vec<usize> =
            labels.iter().enumerate().filter(|(_, &l)| l == class).map(|(i, _)| i).collect();
        let mut rng = substream(seed, class as u64);
        // Fisher-Yates
        for i in (1..indices.len()).rev() {
            let j = rng.gen_range(0..=i);
            indices.swap(i, j);
        }
        for (pos, &row) in indices.iter().enumerate() {
            assignment[row] = pos % k;
        }
    }
    Ok(assignment)
}

// ---------------------------------------------------------------------------
// Sweep runner
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    /// Each bundle is an ordered list of modality block tags.
    pub bundles: Vec<Vec<String>>,
    pub poolers: Vec<Pooler>,
    pub learners: Vec<String>,
}

/// Parse the key=value grid format:
///
/// ```text
/// bundles=A;V;T;A+V
/// poolers=mean;meanstd
/// learners=logreg_pca64_c01;logreg_pca128_c1
/// ```
pub fn parse_grid(text: &str) -> Result<SweepGrid> {
    let mut bundles = None;
    let mut poolers = None;
    let mut learners = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| BgError::Load(format!("grid line {} is not key=value", i + 1)))?;
        let items: Vec<&str> = value.split(';').map(str::trim).filter(|s| !s.is_empty()).collect();
        match key.trim() {
            "bundles" => {
                bundles = Some(
                    items
                        .iter()
                        .map(|b| b.split('+').map(|s| s.trim().to_string()).collect())
                        .collect(),
                )
            }
            "poolers" => {
                poolers = Some(items.iter().map(|p| Pooler::parse(p)).collect::<Result<Vec<_>>>()?)
            }
            "learners" => learners = Some(items.iter().map(|s| s.to_string()).collect()),
            other => return Err(BgError::Load(format!("unknown grid key {other:?}"))),
        }
    }
    Ok(SweepGrid {
        bundles: bundles.ok_or_else(|| BgError::Load("grid missing bundles".into()))?,
        poolers: poolers.ok_or_else(|| BgError::Load("grid missing poolers".into()))?,
        learners: learners.ok_or_else(|| BgError::Load("grid missing learners".into()))?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfigResult {
    pub config_id: String,
    /// Mean 5-fold macro-F1 at cutoff 0.5, folds then seeds.
    pub cv_score: f64,
    /// Per-test-subject probability, averaged over folds then seeds.
    pub test_subject_scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub configs: Vec<SweepConfigResult>,
    pub seeds_used: Vec<u64>,
    pub folds: usize,
}

const SWEEP_FOLDS: usize = 5;

/// Pooled subject vectors for one (bundle, pooler) pair, dev order then test
/// order.
fn pool_subjects(
    features: &FeatureTable,
    subjects: &[String],
    bundle: &[String],
    pooler: Pooler,
) -> Result<Vec<Vec<f64>>> {
    // block -> subject -> turn vectors, preserving row order
    let mut per_block: HashMap<(&str, &str), Vec<&FeatureRecord>> = HashMap::new();
    for r in features.rows() {
        per_block.entry((r.modality_block.as_str(), r.subject_id.as_str())).or_default().push(r);
    }
    let mut out = Vec::with_capacity(subjects.len());
    for sid in subjects {
        let mut vector = Vec::new();
        for block in bundle {
            let rows = per_block.get(&(block.as_str(), sid.as_str())).ok_or_else(|| {
                BgError::Schema(format!("subject {sid} has no rows for block {block}"))
            })?;
            let turns: Vec<Vec<f64>> = rows.iter().map(|r| r.features.clone()).collect();
            vector.extend(pool_vectors(&turns, pooler)?);
        }
        out.push(vector);
    }
    Ok(out)
}

/// Run the full configuration sweep.
///
/// Per config and seed: stratified 5-fold CV on the dev subjects gives the
/// CV macro-F1 (cutoff 0.5); each fold's model also scores every test
/// subject, and test probabilities are averaged over folds, then over
/// seeds. Test labels are never read during training.
pub fn run_sweep(
    features: &FeatureTable,
    dev_subjects: &[String],
    test_subjects: &[String],
    grid: &SweepGrid,
    seeds: &[u64],
) -> Result<SweepResult> {
    if seeds.is_empty() {
        return Err(BgError::InvalidArg("at least one seed required".into()));
    }
    // canonicalize so seed averaging is order- and duplicate-invariant
    let mut seeds: Vec<u64> = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    let seeds = &seeds[..];
    let dev_set: BTreeSet<&String> = dev_subjects.iter().collect();
    if let Some(leak) = test_subjects.iter().find(|s| dev_set.contains(s)) {
        return Err(BgError::Integrity(format!(
            "subject {leak} appears in both dev and test"
        )));
    }
    let available = features.blocks();
    for bundle in &grid.bundles {
        for block in bundle {
            if !available.contains(block) {
                return Err(BgError::InvalidArg(format!(
                    "bundle references unknown block {block:?}"
                )));
            }
        }
    }

    let dev_labels: Vec<u8> = dev_subjects
        .iter()
        .map(|s| features.subject_label(s))
        .collect::<Result<Vec<_>>>()?;

    // enumerate configs; pooled vectors are shared across learners
    struct Unit<'a> {
        bundle: &'a [String],
        pooler: Pooler,
        learner: &'a str,
    }
    let mut units = Vec::new();
    for bundle in &grid.bundles {
        for &pooler in &grid.poolers {
            for learner in &grid.learners {
                units.push(Unit { bundle, pooler, learner });
            }
        }
    }

    let configs: Vec<SweepConfigResult> = units
        .par_iter()
        .map(|unit| -> Result<SweepConfigResult> {
            let learner = parse_learner(unit.learner)?;
            let dev_x = pool_subjects(features, dev_subjects, unit.bundle, unit.pooler)?;
            let test_x = pool_subjects(features, test_subjects, unit.bundle, unit.pooler)?;

            let mut seed_cv = Vec::with_capacity(seeds.len());
            let mut seed_test: Vec<Vec<f64>> = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let folds = stratified_folds(&dev_labels, SWEEP_FOLDS, seed)?;
                let mut fold_cv = Vec::with_capacity(SWEEP_FOLDS);
                let mut fold_test: Vec<Vec<f64>> = Vec::with_capacity(SWEEP_FOLDS);
                for fold in 0..SWEEP_FOLDS {
                    let mut train_x = Vec::new();
                    let mut train_y = Vec::new();
                    let mut val_x = Vec::new();
                    let mut val_y = Vec::new();
                    for (i, &f) in folds.iter().enumerate() {
                        if f == fold {
                            val_x.push(dev_x[i].clone());
                            val_y.push(dev_labels[i]);
                        } else {
                            train_x.push(dev_x[i].clone());
                            train_y.push(dev_labels[i]);
                        }
                    }
                    let scorer = learner.train(&train_x, &train_y)?;
                    let val_scores: Vec<f64> = val_x.iter().map(|v| scorer(v)).collect();
                    fold_cv.push(macro_f1_at(&val_scores, &val_y, 0.5)?);
                    fold_test.push(test_x.iter().map(|v| scorer(v)).collect());
                }
                seed_cv.push(fold_cv.iter().sum::<f64>() / SWEEP_FOLDS as f64);
                // folds-then-seeds: average over folds first
                let per_subject: Vec<f64> = (0..test_subjects.len())
                    .map(|s| fold_test.iter().map(|f| f[s]).sum::<f64>() / SWEEP_FOLDS as f64)
                    .collect();
                seed_test.push(per_subject);
            }

            let cv_score = seed_cv.iter().sum::<f64>() / seeds.len() as f64;
            let test_subject_scores: BTreeMap<String, f64> = test_subjects
                .iter()
                .enumerate()
                .map(|(s, sid)| {
                    let mean =
                        seed_test.iter().map(|per| per[s]).sum::<f64>() / seeds.len() as f64;
                    (sid.clone(), mean)
                })
                .collect();
            Ok(SweepConfigResult {
                config_id: format!(
                    "{}|{}|{}",
                    unit.bundle.join("+"),
                    unit.pooler.as_str(),
                    unit.learner
                ),
                cv_score,
                test_subject_scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepResult { configs, seeds_used: seeds.to_vec(), folds: SWEEP_FOLDS })
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n_subjects: usize,
    pub prevalence: f64,
    pub turns_mean: f64,
    /// block tag -> class-conditional mean offset (applied per dimension)
    pub separation: BTreeMap<String, f64>,
    /// block tag -> dimensionality
    pub dims: BTreeMap<String, usize>,
    pub seed: u64,
}

/// Generate a class-conditional Gaussian feature corpus, deterministic under
/// the seed (one substream per subject).
pub fn synth_corpus(spec: &SynthSpec) -> Result<FeatureTable> {
    if spec.n_subjects == 0 {
        return Err(BgError::InvalidArg("n_subjects must be >= 1".into()));
    }
    if !(spec.prevalence > 0.0 && spec.prevalence < 1.0) {
        return Err(BgError::InvalidArg(format!(
            "prevalence must be in (0,1), got {}",
            spec.prevalence
        )));
    }
    if spec.turns_mean < 1.0 {
        return Err(BgError::InvalidArg("turns_mean must be >= 1".into()));
    }
    if spec.dims.is_empty() {
        return Err(BgError::InvalidArg("at least one modality block required".into()));
    }
    for (block, &d) in &spec.dims {
        if d == 0 {
            return Err(BgError::InvalidArg(format!("block {block} has zero dimensions")));
        }
        if !spec.separation.contains_key(block) {
            return Err(BgError::InvalidArg(format!("block {block} missing separation")));
        }
    }

    let mut rows = Vec::new();
    for subject in 0..spec.n_subjects {
        let mut rng = substream(spec.seed, subject as u64);
        let label = u8::from(rng.gen::<f64>() < spec.prevalence);
        let turns = 1 + poisson(&mut rng, spec.turns_mean - 1.0);
        for turn in 0..turns {
            for (block, &d) in &spec.dims {
                let offset = if label == 1 { spec.separation[block] } else { 0.0 };
                let features: Vec<f64> =
                    (0..d).map(|_| offset + standard_normal(&mut rng)).collect();
                rows.push(FeatureRecord {
                    subject_id: format!("subj{subject:04}"),
                    turn_id: format!("t{turn}"),
                    label,
                    modality_block: block.clone(),
                    features,
                });
            }
        }
    }
    FeatureTable::new(rows)
}

fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = (-lambda).exp();
    let mut k = 0usize;
    let mut p = 1.0;
    loop {
        p *= rng.gen::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{auroc, ScoredLabels};

    fn spec(separation: f64, seed: u64) -> SynthSpec {
        SynthSpec {
            n_subjects: 60,
            prevalence: 0.4,
            turns_mean: 4.0,
            separation: BTreeMap::from([("T".to_string(), separation)]),
            dims: BTreeMap::from([("T".to_string(), 6)]),
            seed,
        }
    }

    #[test]
    fn pca_line_in_2d() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let m = pca_fit(&x, 1).unwrap();
        let c = &m.components[0];
        // parallel to (1, 2) / sqrt(5)
        assert!((c[0] - 1.0 / 5f64.sqrt()).abs() < 1e-8);
        assert!((c[1] - 2.0 / 5f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn pca_full_basis_reconstruction_identity() {
        let mut rng = substream(5, 0);
        let x: Vec<Vec<f64>> =
            (0..30).map(|_| (0..4).map(|_| rng.gen::<f64>() * 3.0).collect()).collect();
        let m = pca_fit(&x, 4).unwrap();
        for row in &x {
            let rec = m.reconstruct(&m.transform(row));
            for (a, b) in row.iter().zip(&rec) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pca_components_orthonormal_variances_sorted() {
        let mut rng = substream(6, 0);
        let x: Vec<Vec<f64>> =
            (0..50).map(|_| (0..8).map(|_| rng.gen::<f64>()).collect()).collect();
        let m = pca_fit(&x, 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let dot: f64 =
                    m.components[i].iter().zip(&m.components[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8, "components {i},{j}: {dot}");
            }
        }
        for w in m.explained_variance.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn pca_matches_independent_eigensolver() {
        // oracle: Jacobi eigenvalue sweep on the covariance matrix
        fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
            let d = a.len();
            for _ in 0..200 {
                let mut off = 0.0;
                for i in 0..d {
                    for j in (i + 1)..d {
                        off += a[i][j] * a[i][j];
                    }
                }
                if off < 1e-24 {
                    break;
                }
                for p in 0..d {
                    for q in (p + 1)..d {
                        if a[p][q].abs() < 1e-15 {
                            continue;
                        }
                        let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                        let cos = 1.0 / (t * t + 1.0).sqrt();
                        let sin = t * cos;
                        for k in 0..d {
                            let akp = a[k][p];
                            let akq = a[k][q];
                            a[k][p] = cos * akp - sin * akq;
                            a[k][q] = sin * akp + cos * akq;
                        }
                        for k in 0..d {
                            let apk = a[p][k];
                            let aqk = a[q][k];
                            a[p][k] = cos * apk - sin * aqk;
                            a[q][k] = sin * apk + cos * aqk;
                        }
                    }
                }
            }
            let mut eig: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
            eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
            eig
        }

        let mut rng = substream(7, 0);
        let x: Vec<Vec<f64>> =
            (0..50).map(|_| (0..8).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).collect();
        let m = pca_fit(&x, 8).unwrap();

        let n = x.len();
        let d = 8;
        let mean: Vec<f64> =
            (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let mut cov = vec![vec![0.0; d]; d];
        for r in &x {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n as f64 - 1.0);
                }
            }
        }
        let oracle = jacobi_eigenvalues(cov);
        for (got, want) in m.explained_variance.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn pca_rejects_bad_k() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        assert!(pca_fit(&x, 0).is_err());
        assert!(pca_fit(&x, 3).is_err());
    }

    #[test]
    fn logreg_symmetric_problem_has_zero_bias() {
        let x = vec![vec![1.0], vec![-1.0]];
        let y = vec![1, 0];
        let m = logreg_train(&x, &y, 1.0).unwrap();
        assert!(m.bias.abs() < 1e-6, "bias {}", m.bias);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn logreg_separable_data_classified_correctly() {
        let mut rng = substream(3, 0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..30 {
            x.push(vec![rng.gen::<f64>() + 2.0, rng.gen::<f64>()]);
            y.push(1);
            x.push(vec![rng.gen::<f64>() - 3.0, rng.gen::<f64>()]);
            y.push(0);
        }
        let m = logreg_train(&x, &y, 1.0).unwrap();
        for (row, &label) in x.iter().zip(&y) {
            let p = m.predict_proba(row);
            assert_eq!(u8::from(p >= 0.5), label);
        }
    }

    #[test]
    fn logreg_gradient_matches_finite_differences() {
        let mut rng = substream(4, 0);
        let x: Vec<Vec<f64>> =
            (0..25).map(|_| (0..3).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).collect();
        let y: Vec<u8> = (0..25).map(|i| u8::from(i % 2 == 0)).collect();
        for trial in 0..5 {
            let mut prng = substream(100, trial);
            let w: Vec<f64> = (0..3).map(|_| prng.gen::<f64>() * 2.0 - 1.0).collect();
            let b: f64 = prng.gen::<f64>() - 0.5;
            let (gw, gb) = logreg_gradient(&x, &y, 0.7, &w, b);
            let h = 1e-6;
            for i in 0..3 {
                let mut wp = w.clone();
                wp[i] += h;
                let mut wm = w.clone();
                wm[i] -= h;
                let fd = (logreg_objective(&x, &y, 0.7, &wp, b)
                    - logreg_objective(&x, &y, 0.7, &wm, b))
                    / (2.0 * h);
                let rel = (gw[i] - fd).abs() / fd.abs().max(1.0);
                assert!(rel < 1e-6, "dim {i}: analytic {} vs fd {fd}", gw[i]);
            }
            let fdb = (logreg_objective(&x, &y, 0.7, &w, b + h)
                - logreg_objective(&x, &y, 0.7, &w, b - h))
                / (2.0 * h);
            assert!((gb - fdb).abs() / fdb.abs().max(1.0) < 1e-6);
        }
    }

    #[test]
    fn logreg_weaker_regularization_never_increases_train_loss() {
        let mut rng = substream(8, 0);
        let x: Vec<Vec<f64>> =
            (0..40).map(|_| (0..4).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 0)).collect();
        let mut prev = f64::INFINITY;
        for c in [0.01, 0.1, 1.0, 10.0] {
            let m = logreg_train(&x, &y, c).unwrap();
            // pure log-loss, no penalty
            let loss = logreg_objective(&x, &y, f64::INFINITY, &m.weights, m.bias);
            assert!(loss <= prev + 1e-9, "c={c}: {loss} > {prev}");
            prev = loss;
        }
    }

    #[test]
    fn logreg_rejects_single_class() {
        assert!(logreg_train(&[vec![1.0], vec![2.0]], &[1, 1], 1.0).is_err());
    }

    #[test]
    fn learner_name_grammar() {
        let l = parse_learner("logreg_pca64_c01").unwrap();
        assert_eq!(l.name(), "logreg_pca64_c01");
        let spec = parse_learner("logreg_pca128_c1").unwrap();
        assert_eq!(spec.name(), "logreg_pca128_c1");
        assert!(parse_learner("extratrees_400").is_err());
        assert!(parse_learner("nonsense").is_err());
        assert_eq!(parse_c_token("01"), Some(0.1));
        assert_eq!(parse_c_token("1"), Some(1.0));
        assert_eq!(parse_c_token("025"), Some(0.25));
        assert_eq!(parse_c_token("10"), Some(10.0));
        assert_eq!(parse_c_token("0"), None);
    }

    #[test]
    fn stratified_folds_exact_divisibility() {
        let labels = vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0];
        let folds = stratified_folds(&labels, 5, 13).unwrap();
        for fold in 0..5 {
            let pos = labels
                .iter()
                .zip(&folds)
                .filter(|(&l, &f)| l == 1 && f == fold)
                .count();
            let neg = labels
                .iter()
                .zip(&folds)
                .filter(|(&l, &f)| l == 0 && f == fold)
                .count();
            assert_eq!(pos, 1);
            assert_eq!(neg, 1);
        }
    }

    #[test]
    fn stratified_folds_deterministic_and_balanced() {
        let mut rng = substream(21, 0);
        for trial in 0..200 {
            let n = rng.gen_range(12..60);
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let k = 3;
            if labels.iter().filter(|&&l| l == 1).count() < k
                || labels.iter().filter(|&&l| l == 0).count() < k
            {
                continue;
            }
            let a = stratified_folds(&labels, k, trial).unwrap();
            let b = stratified_folds(&labels, k, trial).unwrap();
            assert_eq!(a, b);
            for class in [0u8, 1] {
                let mut counts = vec![0usize; k];
                for (&l, &f) in labels.iter().zip(&a) {
                    if l == class {
                        counts[f] += 1;
                    }
                }
                assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
        }
    }

    #[test]
    fn stratified_folds_rejects_small_class() {
        let err = stratified_folds(&[1, 1, 1, 0, 1, 1], 5, 13).unwrap_err();
        assert!(err.to_string().contains("class 0"), "{err}");
    }

    #[test]
    fn synth_corpus_deterministic() {
        let a = synth_corpus(&spec(1.0, 13)).unwrap();
        let b = synth_corpus(&spec(1.0, 13)).unwrap();
        assert_eq!(a, b);
        let c = synth_corpus(&spec(1.0, 14)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synth_null_corpus_is_uninformative() {
        let table = synth_corpus(&spec(0.0, 13)).unwrap();
        // score each subject by its mean first-dimension value; AUROC ~ 0.5
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for sid in table.subject_ids() {
            let rows: Vec<_> = table.rows().iter().filter(|r| r.subject_id == sid).collect();
            let mean: f64 =
                rows.iter().map(|r| r.features[0]).sum::<f64>() / rows.len() as f64;
            scores.push(sigmoid(mean));
            labels.push(rows[0].label);
        }
        let a = auroc(&ScoredLabels::new(scores, labels).unwrap()).unwrap();
        assert!((a - 0.5).abs() < 0.25, "null corpus auroc {a}");
    }

    #[test]
    fn grid_parses() {
        let g = parse_grid("bundles=A;T;A+T\npoolers=mean;meanstd\nlearners=logreg_pca64_c01\n")
            .unwrap();
        assert_eq!(g.bundles.len(), 3);
        assert_eq!(g.bundles[2], vec!["A".to_string(), "T".to_string()]);
        assert_eq!(g.poolers, vec![Pooler::Mean, Pooler::MeanStd]);
        assert!(parse_grid("bundles=A\n").is_err());
    }

    fn separable_sweep_inputs() -> (FeatureTable, Vec<String>, Vec<String>) {
        let table = synth_corpus(&SynthSpec {
            n_subjects: 40,
            prevalence: 0.5,
            turns_mean: 3.0,
            separation: BTreeMap::from([("A".to_string(), 3.0), ("T".to_string(), 3.0)]),
            dims: BTreeMap::from([("A".to_string(), 4), ("T".to_string(), 4)]),
            seed: 13,
        })
        .unwrap();
        let subjects: Vec<String> = table.subject_ids().into_iter().collect();
        let (dev, test) = subjects.split_at(28);
        (table.clone(), dev.to_vec(), test.to_vec())
    }

    #[test]
    fn sweep_grid_arithmetic_and_separable_scores() {
        let (table, dev, test) = separable_sweep_inputs();
        let grid = SweepGrid {
            bundles: vec![vec!["A".into()], vec!["T".into()], vec!["A".into(), "T".into()]],
            poolers: vec![Pooler::Mean, Pooler::MeanStd],
            learners: vec!["logreg_pca64_c01".into(), "logreg_pca128_c1".into()],
        };
        let result = run_sweep(&table, &dev, &test, &grid, &[13, 23]).unwrap();
        assert_eq!(result.configs.len(), 3 * 2 * 2);
        for cfg in &result.configs {
            assert!(cfg.cv_score >= 0.9, "{}: cv {}", cfg.config_id, cfg.cv_score);
            for p in cfg.test_subject_scores.values() {
                assert!((0.0..=1.0).contains(p));
            }
        }
    }

    #[test]
    fn sweep_seed_order_does_not_change_test_scores() {
        let (table, dev, test) = separable_sweep_inputs();
        let grid = SweepGrid {
            bundles: vec![vec!["T".into()]],
            poolers: vec![Pooler::Mean],
            learners: vec!["logreg_pca64_c01".into()],
        };
        let a = run_sweep(&table, &dev, &test, &grid, &[13, 23, 37]).unwrap();
        let b = run_sweep(&table, &dev, &test, &grid, &[37, 13, 23]).unwrap();
        assert_eq!(a.configs[0].test_subject_scores, b.configs[0].test_subject_scores);
    }

    #[test]
    fn sweep_rejects_dev_test_overlap() {
        let (table, dev, mut test) = separable_sweep_inputs();
        test.push(dev[0].clone());
        let grid = SweepGrid {
            bundles: vec![vec!["T".into()]],
            poolers: vec![Pooler::Mean],
            learners: vec!["logreg_pca64_c01".into()],
        };
        assert!(matches!(
            run_sweep(&table, &dev, &test, &grid, &[13]),
            Err(BgError::Integrity(_))
        ));
    }

    #[test]
    fn sweep_never_reads_test_labels() {
        let (table, dev, test) = separable_sweep_inputs();
        let grid = SweepGrid {
            bundles: vec![vec!["A".into(), "T".into()]],
            poolers: vec![Pooler::MeanStd],
            learners: vec!["logreg_pca64_c01".into()],
        };
        let clean = run_sweep(&table, &dev, &test, &grid, &[13]).unwrap();
        // poison: flip every test subject's label
        let test_set: BTreeSet<&String> = test.iter().collect();
        let poisoned_rows: Vec<FeatureRecord> = table
            .rows()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                if test_set.contains(&r.subject_id) {
                    r.label = 1 - r.label;
                }
                r
            })
            .collect();
        let poisoned_table = FeatureTable::new(poisoned_rows).unwrap();
        let poisoned = run_sweep(&poisoned_table, &dev, &test, &grid, &[13]).unwrap();
        assert_eq!(clean.configs[0].test_subject_scores, poisoned.configs[0].test_subject_scores);
    }
}
