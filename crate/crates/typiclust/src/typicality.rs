//! Typicality scores: the inverse of the mean Euclidean distance to a
//! point's K nearest neighbors within a subset.
//!
//! Two implementations share one contract: [`knn_typicality`] (per-point
//! neighbor selection) and [`brute_force_typicality`] (full pairwise
//! matrix, the test oracle). Both order neighbor distances ascending with
//! index tie-breaks before summing, so their outputs agree bitwise.

use crate::model::{euclidean_distance, EmbeddingSet};
use crate::parallel::parallel_map_range;
use std::collections::HashMap;
use thiserror::Error;

/// Cap applied when all effective neighbors sit at distance exactly zero:
/// the score becomes `1/COINCIDENT_EPS` and the point is reported as capped.
pub const COINCIDENT_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum TypicalityError {
    #[error("subset has {0} points; at least 2 are required")]
    SubsetTooSmall(usize),
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("candidate {0} has no computed score")]
    UnscoredCandidate(usize),
}

/// Typicality scores over a subset of examples, aligned with the subset's
/// given order.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityScores {
    subset: Vec<usize>,
    scores: Vec<f64>,
    k_used: Vec<usize>,
    /// Subset members whose mean neighbor distance was exactly zero
    /// (coincident duplicates); their score carries the cap.
    capped: Vec<usize>,
    by_index: HashMap<usize, usize>,
}

impl TypicalityScores {
    fn new(subset: Vec<usize>, scores: Vec<f64>, k_used: Vec<usize>, capped: Vec<usize>) -> Self {
        let by_index = subset.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        Self {
            subset,
            scores,
            k_used,
            capped,
            by_index,
        }
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn k_used(&self) -> &[usize] {
        &self.k_used
    }

    pub fn capped(&self) -> &[usize] {
        &self.capped
    }

    /// Score of a specific example index, if it was part of the subset.
    pub fn score_of(&self, index: usize) -> Option<f64> {
        self.by_index.get(&index).map(|&p| self.scores[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.subset.iter().copied().zip(self.scores.iter().copied())
    }
}

fn check_subset(subset: &[usize], n: usize) -> Result<(), TypicalityError> {
    if subset.len() < 2 {
        return Err(TypicalityError::SubsetTooSmall(subset.len()));
    }
    debug_assert!(subset.iter().all(|&i| i < n), "subset index out of range");
    #[cfg(debug_assertions)]
    {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        debug_assert_eq!(sorted.len(), subset.len(), "subset contains duplicates");
    }
    let _ = n;
    Ok(())
}

/// Turns the k nearest (distance, index) pairs, already sorted ascending,
/// into a score: k_eff divided by the distance sum, capped on coincident
/// clusters.
fn score_from_sorted(neighbors: &[(f64, usize)]) -> (f64, bool) {
    let k_eff = neighbors.len();
    let mut sum = 0.0;
    for (dist, _) in neighbors {
        sum += dist;
    }
    if sum == 0.0 {
        (1.0 / COINCIDENT_EPS, true)
    } else {
        (k_eff as f64 / sum, false)
    }
}

/// Typicality of every subset member: `k_eff / Σ distance-to-neighbor`,
/// neighbors drawn from the subset excluding the point itself, with
/// `k_eff = min(k, |subset| - 1)`.
pub fn knn_typicality(
    embeddings: &EmbeddingSet,
    subset: &[usize],
    k: usize,
) -> Result<TypicalityScores, TypicalityError> {
    check_subset(subset, embeddings.len())?;
    let k_eff = k.min(subset.len() - 1);
    let per_point = parallel_map_range(subset.len(), |p| {
        let i = subset[p];
        let mut dists: Vec<(f64, usize)> = subset
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| (euclidean_distance(embeddings.row(i), embeddings.row(j)), j))
            .collect();
        // Partial selection of the k_eff nearest, then an ascending sort of
        // just those; ordering key (distance, index) matches the oracle.
        if k_eff < dists.len() {
            dists.select_nth_unstable_by(k_eff - 1, cmp_dist_idx);
            dists.truncate(k_eff);
        }
        dists.sort_unstable_by(cmp_dist_idx);
        score_from_sorted(&dists)
    });
    Ok(collect_scores(subset, k_eff, per_point))
}

/// Oracle twin of [`knn_typicality`]: materializes the full pairwise
/// distance matrix and sorts whole rows. Intended for subsets up to a few
/// thousand points.
pub fn brute_force_typicality(
    embeddings: &EmbeddingSet,
    subset: &[usize],
    k: usize,
) -> Result<TypicalityScores, TypicalityError> {
    check_subset(subset, embeddings.len())?;
    let s = subset.len();
    let k_eff = k.min(s - 1);
    // Symmetric matrix, each distance computed once.
    let mut matrix = vec![0.0f64; s * s];
    for a in 0..s {
        for b in (a + 1)..s {
            let d = euclidean_distance(embeddings.row(subset[a]), embeddings.row(subset[b]));
            matrix[a * s + b] = d;
            matrix[b * s + a] = d;
        }
    }
    let per_point = parallel_map_range(s, |p| {
        let mut row: Vec<(f64, usize)> = (0..s)
            .filter(|&q| q != p)
            .map(|q| (matrix[p * s + q], subset[q]))
            .collect();
        row.sort_unstable_by(cmp_dist_idx);
        row.truncate(k_eff);
        score_from_sorted(&row)
    });
    Ok(collect_scores(subset, k_eff, per_point))
}

fn cmp_dist_idx(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn collect_scores(subset: &[usize], k_eff: usize, per_point: Vec<(f64, bool)>) -> TypicalityScores {
    let mut scores = Vec::with_capacity(per_point.len());
    let mut capped = Vec::new();
    for (p, (score, was_capped)) in per_point.into_iter().enumerate() {
        scores.push(score);
        if was_capped {
            capped.push(subset[p]);
        }
    }
    let k_used = vec![k_eff; subset.len()];
    TypicalityScores::new(subset.to_vec(), scores, k_used, capped)
}

/// Candidate with the highest score; exact ties go to the lowest index.
pub fn argmax_typicality(
    scores: &TypicalityScores,
    candidates: &[usize],
) -> Result<usize, TypicalityError> {
    extremum(scores, candidates, |best, s| s > best)
}

/// Candidate with the lowest score; exact ties go to the lowest index.
pub fn argmin_typicality(
    scores: &TypicalityScores,
    candidates: &[usize],
) -> Result<usize, TypicalityError> {
    extremum(scores, candidates, |best, s| s < best)
}

fn extremum(
    scores: &TypicalityScores,
    candidates: &[usize],
    better: impl Fn(f64, f64) -> bool,
) -> Result<usize, TypicalityError> {
    if candidates.is_empty() {
        return Err(TypicalityError::EmptyCandidates);
    }
    let mut best: Option<(usize, f64)> = None;
    for &c in candidates {
        let s = scores
            .score_of(c)
            .ok_or(TypicalityError::UnscoredCandidate(c))?;
        best = match best {
            None => Some((c, s)),
            Some((bi, bs)) if better(bs, s) || (s == bs && c < bi) => Some((c, s)),
            keep => keep,
        };
    }
    Ok(best.expect("candidates non-empty").0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EmbeddingSet;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line_points() -> EmbeddingSet {
        EmbeddingSet::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap()
    }

    #[test]
    fn three_point_line_hand_values() {
        // middle point: mean distance (1+1)/2 = 1 -> 1.0
        // endpoints: mean (1+2)/2 = 1.5 -> 2/3
        let set = line_points();
        let scores = knn_typicality(&set, &[0, 1, 2], 2).unwrap();
        assert_eq!(scores.scores(), &[2.0 / 3.0, 1.0, 2.0 / 3.0]);
        assert_eq!(scores.k_used(), &[2, 2, 2]);
    }

    #[test]
    fn symmetric_pair_k1() {
        let set = EmbeddingSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let scores = knn_typicality(&set, &[0, 1], 1).unwrap();
        assert_eq!(scores.scores(), &[1.0, 1.0]);

        let set = EmbeddingSet::from_rows(&[vec![0.0], vec![4.0]]).unwrap();
        let scores = brute_force_typicality(&set, &[0, 1], 1).unwrap();
        assert_eq!(scores.scores(), &[0.25, 0.25]);
    }

    #[test]
    fn k_clamps_to_subset_size() {
        let set = line_points();
        let scores = brute_force_typicality(&set, &[0, 1, 2], 99).unwrap();
        assert_eq!(scores.k_used(), &[2, 2, 2]);
    }

    #[test]
    fn subset_too_small() {
        let set = line_points();
        assert_eq!(
            knn_typicality(&set, &[1], 2).unwrap_err(),
            TypicalityError::SubsetTooSmall(1)
        );
    }

    #[test]
    fn coincident_cluster_capped_not_fatal() {
        let set = EmbeddingSet::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]])
            .unwrap();
        let scores = knn_typicality(&set, &[0, 1, 2], 2).unwrap();
        assert_eq!(scores.scores(), &[1e12, 1e12, 1e12]);
        assert_eq!(scores.capped(), &[0, 1, 2]);
    }

    #[test]
    fn oracle_equivalence_random_8d() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..8).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let set = EmbeddingSet::from_rows(&rows).unwrap();
        let subset: Vec<usize> = (0..200).collect();
        let fast = knn_typicality(&set, &subset, 20).unwrap();
        let slow = brute_force_typicality(&set, &subset, 20).unwrap();
        for (a, b) in fast.scores().iter().zip(slow.scores()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(fast.k_used(), slow.k_used());
        assert_eq!(fast.capped(), slow.capped());
    }

    #[test]
    fn argmax_three_point_line() {
        let set = line_points();
        let scores = knn_typicality(&set, &[0, 1, 2], 2).unwrap();
        assert_eq!(argmax_typicality(&scores, &[0, 1, 2]).unwrap(), 1);
        assert_eq!(argmax_typicality(&scores, &[2]).unwrap(), 2);
        assert_eq!(
            argmax_typicality(&scores, &[]).unwrap_err(),
            TypicalityError::EmptyCandidates
        );
        // argmin ties break low: endpoints share 2/3
        assert_eq!(argmin_typicality(&scores, &[0, 1, 2]).unwrap(), 0);
    }

    #[test]
    fn argmax_exact_tie_breaks_low() {
        // Four isolated pairs at unit spacing: every nearest neighbor sits
        // at distance exactly 1, so all scores are exactly 1.0.
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![(i / 2) as f64 * 10.0 + (i % 2) as f64])
            .collect();
        let set = EmbeddingSet::from_rows(&rows).unwrap();
        let subset: Vec<usize> = (0..8).collect();
        let scores = knn_typicality(&set, &subset, 1).unwrap();
        assert!(scores.scores().iter().all(|&s| s == 1.0));
        assert_eq!(argmax_typicality(&scores, &[4, 7]).unwrap(), 4);
    }

    #[test]
    fn scale_covariance_power_of_two_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let set = EmbeddingSet::from_rows(&rows).unwrap();
        let scaled_rows: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().map(|v| v * 4.0).collect()).collect();
        let scaled = EmbeddingSet::from_rows(&scaled_rows).unwrap();
        let subset: Vec<usize> = (0..40).collect();
        let base = knn_typicality(&set, &subset, 5).unwrap();
        let after = knn_typicality(&scaled, &subset, 5).unwrap();
        for (a, b) in base.scores().iter().zip(after.scores()) {
            assert_eq!(*a, b * 4.0);
        }
    }

    #[test]
    fn translation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip([0.7, -1.3, 2.1, 0.4]).map(|(v, s)| v + s).collect())
            .collect();
        let subset: Vec<usize> = (0..50).collect();
        let base = knn_typicality(&EmbeddingSet::from_rows(&rows).unwrap(), &subset, 7).unwrap();
        let moved =
            knn_typicality(&EmbeddingSet::from_rows(&shifted).unwrap(), &subset, 7).unwrap();
        for (a, b) in base.scores().iter().zip(moved.scores()) {
            assert!((a - b).abs() <= 1e-9 * a.abs());
        }
    }

    #[test]
    fn densification_never_decreases_score() {
        // Base: query at origin with neighbors at distance 1. Adding points
        // at epsilon distance must raise the query's typicality.
        let mut rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        let set = EmbeddingSet::from_rows(&rows).unwrap();
        let before = knn_typicality(&set, &[0, 1, 2, 3], 3).unwrap().scores()[0];
        for step in 0..3 {
            rows.push(vec![1e-6 * (step + 1) as f64, 0.0]);
        }
        let denser = EmbeddingSet::from_rows(&rows).unwrap();
        let subset: Vec<usize> = (0..rows.len()).collect();
        let after = knn_typicality(&denser, &subset, 3).unwrap().scores()[0];
        assert!(after >= before);
        assert!(after > 1e5); // neighbors now at ~1e-6
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn prop_oracle_equivalence(n in 2usize..40, d in 1usize..5, k in 1usize..25, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let set = EmbeddingSet::from_rows(&rows).unwrap();
            let subset: Vec<usize> = (0..n).collect();
            let fast = knn_typicality(&set, &subset, k).unwrap();
            let slow = brute_force_typicality(&set, &subset, k).unwrap();
            for (a, b) in fast.scores().iter().zip(slow.scores()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
