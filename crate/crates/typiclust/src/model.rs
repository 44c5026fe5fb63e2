//! Core domain types: embedding sets, labeled/unlabeled pools, query
//! batches, and strategy configuration.
//!
//! All selection math downstream runs on Euclidean distances over these
//! types. Embeddings are validated once at construction and treated as
//! immutable afterwards; pool transitions build new values.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Sentinel for "label unknown" in label vectors.
pub const UNKNOWN_LABEL: i32 = -1;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("duplicate example id {0}")]
    DuplicateId(u64),
    #[error("label out of range at row {0}")]
    LabelOutOfRange(usize),
    #[error("row {0} has norm below 1e-12 and cannot be normalized")]
    ZeroNormRow(usize),
    #[error("matrix must be non-empty and rectangular (got {len} values for dimension {dim})")]
    BadShape { len: usize, dim: usize },
    #[error("{what} length {got} does not match row count {rows}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        rows: usize,
    },
    #[error("index {0} out of range for pool of size {1}")]
    IndexOutOfRange(usize, usize),
    #[error("index {0} is already labeled")]
    AlreadyLabeled(usize),
    #[error("duplicate index {0} in batch")]
    DuplicateIndex(usize),
    #[error("unknown strategy name {0:?}")]
    UnknownStrategy(String),
}

/// A validated N×d matrix of embedding vectors with ids and optional labels.
///
/// Rows are the unit of identity: every selection operation works on row
/// indices. External ids are carried through but never enter any distance
/// computation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    data: Vec<f64>, // row-major N×d
    n: usize,
    d: usize,
    ids: Vec<u64>,
    labels: Option<Vec<i32>>,
    class_count: Option<u32>,
    normalized: bool,
}

impl EmbeddingSet {
    /// Validates a row-major matrix and optional labels into an `EmbeddingSet`.
    ///
    /// Rejects non-finite entries, duplicate ids, and labels outside
    /// `[0, classes)` (with [`UNKNOWN_LABEL`] always admitted). When
    /// `classes` is `None` the class count is inferred as `max(label) + 1`.
    pub fn validate(
        data: Vec<f64>,
        dim: usize,
        ids: Option<Vec<u64>>,
        labels: Option<Vec<i32>>,
        classes: Option<u32>,
    ) -> Result<Self, ModelError> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(ModelError::BadShape {
                len: data.len(),
                dim,
            });
        }
        let n = data.len() / dim;
        for (pos, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteEntry {
                    row: pos / dim,
                    col: pos % dim,
                });
            }
        }
        let ids = match ids {
            Some(ids) => {
                if ids.len() != n {
                    return Err(ModelError::LengthMismatch {
                        what: "ids",
                        got: ids.len(),
                        rows: n,
                    });
                }
                let mut sorted = ids.clone();
                sorted.sort_unstable();
                for w in sorted.windows(2) {
                    if w[0] == w[1] {
                        return Err(ModelError::DuplicateId(w[0]));
                    }
                }
                ids
            }
            None => (0..n as u64).collect(),
        };
        let class_count = match (&labels, classes) {
            (Some(labels), declared) => {
                if labels.len() != n {
                    return Err(ModelError::LengthMismatch {
                        what: "labels",
                        got: labels.len(),
                        rows: n,
                    });
                }
                let max_label = labels.iter().copied().filter(|&l| l >= 0).max();
                let c = match declared {
                    Some(c) => c,
                    None => max_label.map_or(0, |m| m as u32 + 1),
                };
                for (row, &l) in labels.iter().enumerate() {
                    if l != UNKNOWN_LABEL && (l < 0 || l as u32 >= c) {
                        return Err(ModelError::LabelOutOfRange(row));
                    }
                }
                Some(c)
            }
            (None, declared) => declared,
        };
        Ok(Self {
            data,
            n,
            d: dim,
            ids,
            labels,
            class_count,
            normalized: false,
        })
    }

    /// Convenience constructor from per-row slices (used heavily in tests).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(ModelError::BadShape {
                len: rows.iter().map(Vec::len).sum(),
                dim,
            });
        }
        let data = rows.iter().flatten().copied().collect();
        Self::validate(data, dim, None, None, None)
    }

    /// Returns a copy with every row scaled to unit Euclidean norm and the
    /// normalized flag set. Rows with norm below `1e-12` are rejected.
    pub fn l2_normalize(&self) -> Result<Self, ModelError> {
        let mut out = self.clone();
        for i in 0..self.n {
            let row = &mut out.data[i * self.d..(i + 1) * self.d];
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(ModelError::ZeroNormRow(i));
            }
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        out.normalized = true;
        Ok(out)
    }

    /// Copy with labels removed. Experiment drivers hand this to
    /// unsupervised strategies so label leakage is impossible by
    /// construction.
    pub fn without_labels(&self) -> Self {
        let mut out = self.clone();
        out.labels = None;
        out
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn labels(&self) -> Option<&[i32]> {
        self.labels.as_deref()
    }

    /// Label of row `i`, or `None` when unlabeled or unknown.
    pub fn label_of(&self, i: usize) -> Option<u32> {
        self.labels
            .as_ref()
            .and_then(|l| (l[i] != UNKNOWN_LABEL).then_some(l[i] as u32))
    }

    pub fn class_count(&self) -> Option<u32> {
        self.class_count
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Euclidean distance between rows `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean_distance(self.row(i), self.row(j))
    }
}

/// Euclidean distance, accumulated in index order so results are
/// bit-reproducible across call sites.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc.sqrt()
}

/// Partition of example indices into a labeled set and an unlabeled pool.
///
/// `labeled` keeps acquisition order; `unlabeled` stays in ascending
/// index order. The two always partition `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
    iteration: u32,
    n: usize,
}

impl PoolState {
    /// Iteration 0 with an empty labeled set: initial pool selection.
    pub fn initial(n: usize) -> Self {
        Self {
            labeled: Vec::new(),
            unlabeled: (0..n).collect(),
            iteration: 0,
            n,
        }
    }

    /// Pool with a pre-existing labeled set (indices must be in range and
    /// distinct).
    pub fn with_labeled(n: usize, labeled: &[usize]) -> Result<Self, ModelError> {
        let mut is_labeled = vec![false; n];
        for &i in labeled {
            if i >= n {
                return Err(ModelError::IndexOutOfRange(i, n));
            }
            if is_labeled[i] {
                return Err(ModelError::DuplicateIndex(i));
            }
            is_labeled[i] = true;
        }
        let unlabeled = (0..n).filter(|&i| !is_labeled[i]).collect();
        Ok(Self {
            labeled: labeled.to_vec(),
            unlabeled,
            iteration: 0,
            n,
        })
    }

    /// Moves a query batch from the unlabeled pool to the labeled set,
    /// producing the next iteration's pool. The total index count is
    /// preserved by construction.
    pub fn apply_batch(&self, batch: &QueryBatch) -> Result<Self, ModelError> {
        let mut move_out = vec![false; self.n];
        for &i in &batch.indices {
            if i >= self.n {
                return Err(ModelError::IndexOutOfRange(i, self.n));
            }
            if move_out[i] {
                return Err(ModelError::DuplicateIndex(i));
            }
            move_out[i] = true;
        }
        let mut labeled_mask = self.labeled_mask();
        for &i in &batch.indices {
            if labeled_mask[i] {
                return Err(ModelError::AlreadyLabeled(i));
            }
            labeled_mask[i] = true;
        }
        let mut labeled = self.labeled.clone();
        labeled.extend_from_slice(&batch.indices);
        let unlabeled = self
            .unlabeled
            .iter()
            .copied()
            .filter(|&i| !move_out[i])
            .collect();
        Ok(Self {
            labeled,
            unlabeled,
            iteration: self.iteration + 1,
            n: self.n,
        })
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn labeled_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &i in &self.labeled {
            mask[i] = true;
        }
        mask
    }
}

/// Per-selection diagnostics carried alongside each queried index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDiagnostic {
    pub index: usize,
    /// Cluster the pick was drawn from; `None` for non-clustering strategies.
    pub cluster: Option<usize>,
    /// Typicality score of the pick; `None` when the strategy does not score.
    pub typicality: Option<f64>,
    /// 0-based position in the batch.
    pub rank: usize,
}

/// Ordered result of one selection round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryBatch {
    pub strategy: String,
    pub seed: u64,
    pub indices: Vec<usize>,
    /// Set when the pool held fewer than the requested budget.
    pub truncated: bool,
    pub diagnostics: Vec<SelectionDiagnostic>,
}

/// Selection strategy identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    TypiclustRp,
    TpcRand,
    TpcInv,
    TpcNoclust,
    Random,
    Uncertainty,
    Margin,
    Entropy,
    Coreset,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 9] = [
        StrategyKind::TypiclustRp,
        StrategyKind::TpcRand,
        StrategyKind::TpcInv,
        StrategyKind::TpcNoclust,
        StrategyKind::Random,
        StrategyKind::Uncertainty,
        StrategyKind::Margin,
        StrategyKind::Entropy,
        StrategyKind::Coreset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::TypiclustRp => "typiclust_rp",
            StrategyKind::TpcRand => "tpc_rand",
            StrategyKind::TpcInv => "tpc_inv",
            StrategyKind::TpcNoclust => "tpc_noclust",
            StrategyKind::Random => "random",
            StrategyKind::Uncertainty => "uncertainty",
            StrategyKind::Margin => "margin",
            StrategyKind::Entropy => "entropy",
            StrategyKind::Coreset => "coreset",
        }
    }

    /// True for strategies that need a model score matrix instead of
    /// embeddings-only input.
    pub fn needs_scores(self) -> bool {
        matches!(
            self,
            StrategyKind::Uncertainty | StrategyKind::Margin | StrategyKind::Entropy
        )
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "typiclust_rp" | "typiclust" => Ok(StrategyKind::TypiclustRp),
            "tpc_rand" => Ok(StrategyKind::TpcRand),
            "tpc_inv" => Ok(StrategyKind::TpcInv),
            "tpc_noclust" => Ok(StrategyKind::TpcNoclust),
            "random" => Ok(StrategyKind::Random),
            "uncertainty" => Ok(StrategyKind::Uncertainty),
            "margin" => Ok(StrategyKind::Margin),
            "entropy" => Ok(StrategyKind::Entropy),
            "coreset" => Ok(StrategyKind::Coreset),
            other => Err(ModelError::UnknownStrategy(other.to_string())),
        }
    }
}

/// Knobs shared by all strategies. Defaults follow the reference
/// hyper-parameters: 20 neighbors, 500 cluster cap, 5-point cluster floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub k_neighbors: usize,
    pub max_clusters: usize,
    pub min_cluster_size: usize,
    pub seed: u64,
    /// Exact k-means at or below this cluster count, mini-batch above.
    pub kmeans_exact_threshold: usize,
    pub minibatch_batch_size: usize,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind, seed: u64) -> Self {
        Self {
            kind,
            k_neighbors: 20,
            max_clusters: 500,
            min_cluster_size: 5,
            seed,
            kmeans_exact_threshold: 50,
            minibatch_batch_size: 1024,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.k_neighbors >= 1 && self.max_clusters >= 1 && self.min_cluster_size >= 1
    }
}

/// One splitmix64 step; used to derive independent sub-seeds from a base
/// seed (per repetition, per iteration) so parallel work stays
/// reproducible.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_matrix_passes() {
        let set =
            EmbeddingSet::validate(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 2, None, None, None)
                .unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.dim(), 2);
        assert_eq!(set.ids(), &[0, 1, 2]);
        assert!(!set.is_normalized());
    }

    #[test]
    fn nan_entry_rejected() {
        let err =
            EmbeddingSet::validate(vec![0.0, 1.0, f64::NAN, 3.0], 2, None, None, None).unwrap_err();
        assert_eq!(err, ModelError::NonFiniteEntry { row: 1, col: 0 });
    }

    #[test]
    fn label_out_of_range_rejected() {
        let err = EmbeddingSet::validate(
            vec![0.0, 1.0, 2.0],
            1,
            None,
            Some(vec![0, 1, 5]),
            Some(3),
        )
        .unwrap_err();
        assert_eq!(err, ModelError::LabelOutOfRange(2));
    }

    #[test]
    fn unknown_label_is_admitted() {
        let set = EmbeddingSet::validate(
            vec![0.0, 1.0, 2.0],
            1,
            None,
            Some(vec![0, UNKNOWN_LABEL, 1]),
            Some(2),
        )
        .unwrap();
        assert_eq!(set.label_of(0), Some(0));
        assert_eq!(set.label_of(1), None);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = EmbeddingSet::validate(
            vec![0.0, 1.0, 2.0],
            1,
            Some(vec![7, 3, 7]),
            None,
            None,
        )
        .unwrap_err();
        assert_eq!(err, ModelError::DuplicateId(7));
    }

    #[test]
    fn l2_normalize_three_four_five() {
        let set = EmbeddingSet::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let normed = set.l2_normalize().unwrap();
        assert_eq!(normed.row(0), &[0.6, 0.8]);
        assert!(normed.is_normalized());
    }

    #[test]
    fn l2_normalize_unit_vector_identity() {
        let set = EmbeddingSet::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let normed = set.l2_normalize().unwrap();
        assert_eq!(normed.row(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn l2_normalize_random_rows_unit_norm() {
        // Cheap deterministic pseudo-random values; the check recomputes
        // norms directly.
        let mut state = 0x12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
        };
        let rows: Vec<Vec<f64>> = (0..100).map(|_| (0..8).map(|_| next()).collect()).collect();
        let set = EmbeddingSet::from_rows(&rows).unwrap();
        let normed = set.l2_normalize().unwrap();
        for row in normed.rows() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn l2_normalize_zero_row_rejected() {
        let set = EmbeddingSet::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(set.l2_normalize().unwrap_err(), ModelError::ZeroNormRow(0));
    }

    #[test]
    fn l2_normalize_idempotent() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| (0..4).map(|j| ((i * 7 + j * 3) % 13) as f64 - 6.0 + 0.5).collect())
            .collect();
        let once = EmbeddingSet::from_rows(&rows).unwrap().l2_normalize().unwrap();
        let twice = once.l2_normalize().unwrap();
        for (a, b) in once.data().iter().zip(twice.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pool_transition_preserves_partition() {
        let pool = PoolState::initial(10);
        assert_eq!(pool.labeled().len() + pool.unlabeled().len(), 10);
        let batch = QueryBatch {
            strategy: "random".into(),
            seed: 0,
            indices: vec![3, 7],
            truncated: false,
            diagnostics: vec![],
        };
        let next = pool.apply_batch(&batch).unwrap();
        assert_eq!(next.labeled(), &[3, 7]);
        assert_eq!(next.labeled().len() + next.unlabeled().len(), 10);
        assert_eq!(next.iteration(), 1);
        assert!(!next.unlabeled().contains(&3));

        // moving an already-labeled index is refused
        assert_eq!(next.apply_batch(&batch).unwrap_err(), ModelError::AlreadyLabeled(3));
    }

    #[test]
    fn strategy_names_round_trip() {
        for kind in StrategyKind::ALL {
            assert_eq!(kind.name().parse::<StrategyKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn derived_seeds_distinct() {
        let seeds: Vec<u64> = (0..100).map(|i| derive_seed(42, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }
}
