//! Batch evaluation: total-variation class balance, cheap closed-form
//! probes (1-NN and one-vs-rest least squares), and the multi-iteration
//! active-learning experiment loop.
//!
//! The probes stand in for network training: they score how useful a
//! labeled batch is in seconds and deterministically, which is what makes
//! the experiment loop reproducible end to end.

use crate::linear::least_squares_separator;
use crate::model::{derive_seed, EmbeddingSet, ModelError, PoolState, QueryBatch, StrategyConfig};
use crate::strategies::{select, StrategyError};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("class count mismatch: {got} vs {want}")]
    ClassCountMismatch { got: usize, want: usize },
    #[error("labeled set is empty")]
    EmptyLabeledSet,
    #[error("example {0} has no label; evaluation needs labels")]
    MissingLabel(usize),
    #[error("embeddings carry no labels; evaluation needs labels")]
    NoLabels,
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Total-variation distance between two categorical distributions over the
/// same classes: `0.5 * Σ |q_c - r_c|`.
pub fn tv_distance(batch: &[f64], reference: &[f64]) -> Result<f64, MetricsError> {
    if batch.len() != reference.len() {
        return Err(MetricsError::ClassCountMismatch {
            got: batch.len(),
            want: reference.len(),
        });
    }
    debug_assert!((batch.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    debug_assert!((reference.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    Ok(0.5 * batch.iter().zip(reference).map(|(q, r)| (q - r).abs()).sum::<f64>())
}

/// Normalized class histogram of the labels at `indices`.
pub fn class_histogram(
    set: &EmbeddingSet,
    indices: &[usize],
    classes: usize,
) -> Result<Vec<f64>, MetricsError> {
    let mut hist = vec![0.0; classes];
    for &i in indices {
        let label = set.label_of(i).ok_or(MetricsError::MissingLabel(i))? as usize;
        if label >= classes {
            return Err(MetricsError::ClassCountMismatch { got: label + 1, want: classes });
        }
        hist[label] += 1.0;
    }
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        for h in hist.iter_mut() {
            *h /= total;
        }
    }
    Ok(hist)
}

/// Nearest-labeled-neighbor accuracy on the test indices; distance ties go
/// to the lowest labeled index.
pub fn one_nn_probe(
    set: &EmbeddingSet,
    labeled: &[usize],
    test: &[usize],
) -> Result<f64, MetricsError> {
    if labeled.is_empty() {
        return Err(MetricsError::EmptyLabeledSet);
    }
    if test.is_empty() {
        return Ok(0.0);
    }
    let predictions = crate::parallel::parallel_map_range(test.len(), |t| {
        let target = test[t];
        let mut best: Option<(f64, usize)> = None;
        for &l in labeled {
            let dist = set.distance(target, l);
            best = match best {
                None => Some((dist, l)),
                Some((bd, bl)) if dist < bd || (dist == bd && l < bl) => Some((dist, l)),
                keep => keep,
            };
        }
        best.expect("labeled non-empty").1
    });
    let mut correct = 0usize;
    for (t, &nearest) in test.iter().zip(&predictions) {
        let truth = set.label_of(*t).ok_or(MetricsError::MissingLabel(*t))?;
        let predicted = set.label_of(nearest).ok_or(MetricsError::MissingLabel(nearest))?;
        if truth == predicted {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// One-vs-rest least-squares probe: fits one separator per class on the
/// labeled set and predicts by argmax score, ties to the lowest class id.
pub fn linear_probe(
    set: &EmbeddingSet,
    labeled: &[usize],
    test: &[usize],
) -> Result<f64, MetricsError> {
    if labeled.is_empty() {
        return Err(MetricsError::EmptyLabeledSet);
    }
    let classes = set.class_count().ok_or(MetricsError::NoLabels)? as usize;
    if test.is_empty() {
        return Ok(0.0);
    }
    let dim = set.dim();
    let mut train = Vec::with_capacity(labeled.len() * dim);
    let mut train_labels = Vec::with_capacity(labeled.len());
    for &l in labeled {
        train.extend_from_slice(set.row(l));
        train_labels.push(set.label_of(l).ok_or(MetricsError::MissingLabel(l))?);
    }
    // degenerate labeled set: a single observed class is predicted
    // everywhere (one-vs-rest scores carry no information)
    let first = train_labels[0];
    if train_labels.iter().all(|&l| l == first) {
        let mut correct = 0usize;
        for &t in test {
            if set.label_of(t).ok_or(MetricsError::MissingLabel(t))? == first {
                correct += 1;
            }
        }
        return Ok(correct as f64 / test.len() as f64);
    }
    let mut separators = Vec::with_capacity(classes);
    for class in 0..classes as u32 {
        let y: Vec<f64> = train_labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        // a labeled set of identical points is degenerate; fall back to a
        // zero score for that class
        let w = least_squares_separator(&train, dim, &y).unwrap_or_else(|_| vec![0.0; dim]);
        separators.push(w);
    }
    let mut correct = 0usize;
    for &t in test {
        let truth = set.label_of(t).ok_or(MetricsError::MissingLabel(t))?;
        let row = set.row(t);
        let mut best_class = 0u32;
        let mut best_score = f64::NEG_INFINITY;
        for (class, w) in separators.iter().enumerate() {
            let score: f64 = row.iter().zip(w).map(|(x, wi)| x * wi).sum();
            if score > best_score {
                best_score = score;
                best_class = class as u32;
            }
        }
        if truth == best_class {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    OneNn,
    Linear,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::OneNn => "1nn",
            ProbeKind::Linear => "linear",
        }
    }
}

/// Experiment loop configuration: one strategy, one budget per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub strategy: StrategyConfig,
    pub budgets: Vec<usize>,
    pub probes: Vec<ProbeKind>,
    pub compute_tv: bool,
}

/// Per-iteration measurements. Wall time is tracked separately so the
/// serialized record stays a deterministic function of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub strategy: String,
    pub seed: u64,
    pub indices: Vec<usize>,
    pub truncated: bool,
    pub labeled_total: usize,
    /// TV distance between the cumulative labeled set's class histogram
    /// and the full-dataset class distribution.
    pub tv_distance: Option<f64>,
    pub one_nn_accuracy: Option<f64>,
    pub linear_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentHeader {
    pub dataset_digest: String,
    pub examples: usize,
    pub dim: usize,
    pub classes: Option<u32>,
    pub strategy: String,
    pub seed: u64,
    pub budgets: Vec<usize>,
    /// Unsupervised strategies are handed a label-stripped embedding set.
    pub labels_withheld: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub header: ExperimentHeader,
    pub iterations: Vec<IterationRecord>,
}

/// A finished run plus its per-iteration wall times (sidecar only).
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub record: ExperimentRecord,
    pub timings: Vec<Duration>,
}

/// FNV-1a over the little-endian bytes of the embedding payload.
pub fn dataset_digest(set: &EmbeddingSet) -> String {
    let mut hash = 0xcbf29ce484222325u64;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    eat(&(set.len() as u64).to_le_bytes());
    eat(&(set.dim() as u64).to_le_bytes());
    for v in set.data() {
        eat(&v.to_le_bytes());
    }
    format!("{hash:016x}")
}

/// Runs the iterative select-reveal-evaluate loop for one seed.
///
/// Strategies see a label-stripped copy of the embeddings; labels only
/// enter the TV and probe evaluations. Each iteration's strategy seed is
/// derived from (seed, iteration), so the whole record is a deterministic
/// function of (embeddings, config, seed).
pub fn run_experiment(
    set: &EmbeddingSet,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<ExperimentRun, MetricsError> {
    let needs_labels = cfg.compute_tv || !cfg.probes.is_empty();
    if needs_labels && set.labels().is_none() {
        return Err(MetricsError::NoLabels);
    }
    let classes = set.class_count().unwrap_or(0) as usize;
    let reference = if cfg.compute_tv {
        let all: Vec<usize> = (0..set.len()).collect();
        Some(class_histogram(set, &all, classes)?)
    } else {
        None
    };
    let blinded = set.without_labels();
    let header = ExperimentHeader {
        dataset_digest: dataset_digest(set),
        examples: set.len(),
        dim: set.dim(),
        classes: set.class_count(),
        strategy: cfg.strategy.kind.name().to_string(),
        seed,
        budgets: cfg.budgets.clone(),
        labels_withheld: true,
    };
    let mut pool = PoolState::initial(set.len());
    let mut iterations = Vec::with_capacity(cfg.budgets.len());
    let mut timings = Vec::with_capacity(cfg.budgets.len());
    for (i, &budget) in cfg.budgets.iter().enumerate() {
        let start = Instant::now();
        let mut strategy_cfg = cfg.strategy.clone();
        strategy_cfg.seed = derive_seed(seed, i as u64);
        let batch: QueryBatch = select(&blinded, &pool, budget, &strategy_cfg)?;
        pool = pool.apply_batch(&batch)?;
        let tv = match &reference {
            Some(reference) => {
                let hist = class_histogram(set, pool.labeled(), classes)?;
                Some(tv_distance(&hist, reference)?)
            }
            None => None,
        };
        let mut one_nn = None;
        let mut linear = None;
        for probe in &cfg.probes {
            let acc = match probe {
                ProbeKind::OneNn => {
                    let acc = one_nn_probe(set, pool.labeled(), pool.unlabeled())?;
                    one_nn = Some(acc);
                    acc
                }
                ProbeKind::Linear => {
                    let acc = linear_probe(set, pool.labeled(), pool.unlabeled())?;
                    linear = Some(acc);
                    acc
                }
            };
            let _ = acc;
        }
        iterations.push(IterationRecord {
            iteration: i as u32,
            strategy: batch.strategy.clone(),
            seed: strategy_cfg.seed,
            indices: batch.indices.clone(),
            truncated: batch.truncated,
            labeled_total: pool.labeled().len(),
            tv_distance: tv,
            one_nn_accuracy: one_nn,
            linear_accuracy: linear,
        });
        timings.push(start.elapsed());
    }
    Ok(ExperimentRun {
        record: ExperimentRecord { header, iterations },
        timings,
    })
}
