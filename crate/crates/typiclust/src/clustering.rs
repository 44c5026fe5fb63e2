//! Diversity clustering: exact Lloyd k-means with plus-plus seeding, a
//! mini-batch variant for large cluster counts, and the cluster-count rule.

use crate::model::EmbeddingSet;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const MAX_LLOYD_ITERS: usize = 300;
const MINIBATCH_EPOCHS: usize = 100;
// Seeded plus-plus restarts; lowest inertia wins.
const KMEANS_RESTARTS: usize = 10;
const MINIBATCH_RESTARTS: usize = 2;
// Candidate inits screened per mini-batch restart before training.
const MINIBATCH_INIT_CANDIDATES: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("requested {k} clusters from {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("batch size {batch} is smaller than the cluster count {k}")]
    BatchTooSmall { batch: usize, k: usize },
}

/// A hard partition into `k` clusters with centroids, per-cluster sizes,
/// and the total within-cluster squared distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    assignment: Vec<usize>,
    centroids: Vec<f64>, // row-major k×d
    sizes: Vec<usize>,
    inertia: f64,
    k: usize,
    d: usize,
}

impl ClusterAssignment {
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, point: usize) -> usize {
        self.assignment[point]
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.d..(c + 1) * self.d]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn cluster_count(&self) -> usize {
        self.k
    }

    /// Point indices of one cluster, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == c)
            .collect()
    }

    /// Wraps an externally produced hard assignment (for example from a
    /// deep-clustering method) so it can drive selection planning.
    /// Centroids and inertia are not available on this path.
    pub fn from_assignment(assignment: Vec<usize>, k: usize) -> Self {
        assert!(assignment.iter().all(|&c| c < k), "cluster id out of range");
        let sizes = cluster_sizes(&assignment, k);
        Self {
            assignment,
            centroids: Vec::new(),
            sizes,
            inertia: 0.0,
            k,
            d: 0,
        }
    }
}

/// `K = min(|L| + B, max_clusters)`.
pub fn choose_cluster_count(labeled_count: usize, budget: usize, max_clusters: usize) -> usize {
    debug_assert!(budget >= 1);
    (labeled_count + budget).min(max_clusters)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

fn nearest_centroid(point: &[f64], centroids: &[f64], k: usize, d: usize) -> (usize, f64) {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for c in 0..k {
        let dist = squared_distance(point, &centroids[c * d..(c + 1) * d]);
        if dist < best_dist {
            best_dist = dist;
            best = c;
        }
    }
    (best, best_dist)
}

/// Plus-plus seeding: first center uniform, then distance-squared weighted
/// draws. Falls back to the lowest unchosen index when every remaining
/// point coincides with a chosen center.
fn plus_plus_init(set: &EmbeddingSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = set.len();
    let mut chosen = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen.push(first);
    let mut min_dist: Vec<f64> = (0..n)
        .map(|i| squared_distance(set.row(i), set.row(first)))
        .collect();
    let mut is_chosen = vec![false; n];
    is_chosen[first] = true;
    while chosen.len() < k {
        let total: f64 = min_dist.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random_range(0.0..total);
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in min_dist.iter().enumerate() {
                acc += w;
                if target < acc {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|&i| !is_chosen[i]).expect("k <= n leaves a point")
        };
        chosen.push(next);
        is_chosen[next] = true;
        for i in 0..n {
            let dist = squared_distance(set.row(i), set.row(next));
            if dist < min_dist[i] {
                min_dist[i] = dist;
            }
        }
    }
    chosen
}

fn assign_all(set: &EmbeddingSet, centroids: &[f64], k: usize) -> Vec<usize> {
    let d = set.dim();
    crate::parallel::parallel_map_range(set.len(), |i| nearest_centroid(set.row(i), centroids, k, d).0)
}

fn cluster_sizes(assignment: &[usize], k: usize) -> Vec<usize> {
    let mut sizes = vec![0usize; k];
    for &c in assignment {
        sizes[c] += 1;
    }
    sizes
}

/// Moves the point farthest from its own centroid into each empty cluster,
/// lowest empty cluster id first, never draining a singleton donor.
/// Returns whether any repair happened.
fn repair_empty_clusters(
    set: &EmbeddingSet,
    assignment: &mut [usize],
    centroids: &[f64],
    k: usize,
) -> bool {
    let d = set.dim();
    let mut sizes = cluster_sizes(assignment, k);
    let mut repaired = false;
    loop {
        let Some(empty) = (0..k).find(|&c| sizes[c] == 0) else {
            break;
        };
        let mut donor: Option<(usize, f64)> = None;
        for i in 0..set.len() {
            let c = assignment[i];
            if sizes[c] < 2 {
                continue;
            }
            let dist = squared_distance(set.row(i), &centroids[c * d..(c + 1) * d]);
            match donor {
                Some((_, best)) if dist <= best => {}
                _ => donor = Some((i, dist)),
            }
        }
        let (point, _) = donor.expect("k <= n guarantees a donor cluster with >= 2 points");
        sizes[assignment[point]] -= 1;
        assignment[point] = empty;
        sizes[empty] += 1;
        repaired = true;
    }
    repaired
}

fn centroid_means(set: &EmbeddingSet, assignment: &[usize], k: usize) -> Vec<f64> {
    let d = set.dim();
    let mut sums = vec![0.0f64; k * d];
    let mut counts = vec![0usize; k];
    // ascending point order keeps the reduction deterministic
    for (i, row) in set.rows().enumerate() {
        let c = assignment[i];
        counts[c] += 1;
        for (acc, v) in sums[c * d..(c + 1) * d].iter_mut().zip(row) {
            *acc += v;
        }
    }
    for c in 0..k {
        debug_assert!(counts[c] > 0, "means called with an empty cluster");
        for v in sums[c * d..(c + 1) * d].iter_mut() {
            *v /= counts[c] as f64;
        }
    }
    sums
}

fn total_inertia(set: &EmbeddingSet, assignment: &[usize], centroids: &[f64]) -> f64 {
    let d = set.dim();
    assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| squared_distance(set.row(i), &centroids[c * d..(c + 1) * d]))
        .sum()
}

fn finish(
    set: &EmbeddingSet,
    assignment: Vec<usize>,
    centroids: Vec<f64>,
    k: usize,
) -> ClusterAssignment {
    let sizes = cluster_sizes(&assignment, k);
    let inertia = total_inertia(set, &assignment, &centroids);
    ClusterAssignment {
        assignment,
        centroids,
        sizes,
        inertia,
        k,
        d: set.dim(),
    }
}

/// Lloyd's algorithm, best of 10 seeded plus-plus restarts; each run goes
/// to an assignment fixpoint or 300 iterations. Deterministic for a fixed
/// (input, k, seed).
pub fn kmeans(set: &EmbeddingSet, k: usize, seed: u64) -> Result<ClusterAssignment, ClusterError> {
    if k == 0 || k > set.len() {
        return Err(ClusterError::KTooLarge { k, n: set.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<ClusterAssignment> = None;
    for _ in 0..KMEANS_RESTARTS {
        let init = plus_plus_init(set, k, &mut rng);
        let run = lloyd_from_init(set, k, &init);
        best = match best {
            Some(prev) if prev.inertia <= run.inertia => Some(prev),
            _ => Some(run),
        };
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd_from_init(set: &EmbeddingSet, k: usize, init: &[usize]) -> ClusterAssignment {
    let d = set.dim();
    let mut centroids = Vec::with_capacity(k * d);
    for &i in init {
        centroids.extend_from_slice(set.row(i));
    }
    let mut assignment = assign_all(set, &centroids, k);
    let mut repaired = repair_empty_clusters(set, &mut assignment, &centroids, k);
    let mut prev_inertia = f64::INFINITY;
    for _ in 0..MAX_LLOYD_ITERS {
        centroids = centroid_means(set, &assignment, k);
        let mut next = assign_all(set, &centroids, k);
        let next_repaired = repair_empty_clusters(set, &mut next, &centroids, k);
        let inertia = total_inertia(set, &next, &centroids);
        if !repaired && !next_repaired {
            debug_assert!(
                inertia <= prev_inertia * (1.0 + 1e-9) + 1e-12,
                "Lloyd iteration increased inertia: {prev_inertia} -> {inertia}"
            );
        }
        prev_inertia = inertia;
        if next == assignment {
            break;
        }
        assignment = next;
        repaired = next_repaired;
    }
    finish(set, assignment, centroids, k)
}

/// Mini-batch k-means: per-centroid 1/count learning-rate updates over 100
/// epochs of seeded shuffled batches, then one full assignment pass.
///
/// Plus-plus seeding alone misses a cluster often enough to matter and
/// mini-batch updates cannot migrate a stranded centroid, so each restart
/// screens several candidate inits by their immediate inertia and trains
/// only the best one.
pub fn minibatch_kmeans(
    set: &EmbeddingSet,
    k: usize,
    seed: u64,
    batch_size: usize,
) -> Result<ClusterAssignment, ClusterError> {
    if k == 0 || k > set.len() {
        return Err(ClusterError::KTooLarge { k, n: set.len() });
    }
    if batch_size < k {
        return Err(ClusterError::BatchTooSmall { batch: batch_size, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<ClusterAssignment> = None;
    for _ in 0..MINIBATCH_RESTARTS {
        let mut init_best: Option<(Vec<usize>, f64)> = None;
        for _ in 0..MINIBATCH_INIT_CANDIDATES {
            let candidate = plus_plus_init(set, k, &mut rng);
            let score = init_inertia(set, &candidate);
            init_best = match init_best {
                Some((_, prev)) if prev <= score => init_best,
                _ => Some((candidate, score)),
            };
        }
        let (init, _) = init_best.expect("at least one candidate");
        let run = minibatch_run(set, k, batch_size, &init, &mut rng);
        best = match best {
            Some(prev) if prev.inertia <= run.inertia => Some(prev),
            _ => Some(run),
        };
    }
    Ok(best.expect("at least one restart"))
}

fn init_inertia(set: &EmbeddingSet, init: &[usize]) -> f64 {
    let d = set.dim();
    let mut centroids = Vec::with_capacity(init.len() * d);
    for &i in init {
        centroids.extend_from_slice(set.row(i));
    }
    set.rows()
        .map(|row| nearest_centroid(row, &centroids, init.len(), d).1)
        .sum()
}

fn minibatch_run(
    set: &EmbeddingSet,
    k: usize,
    batch_size: usize,
    init: &[usize],
    rng: &mut ChaCha8Rng,
) -> ClusterAssignment {
    let n = set.len();
    let d = set.dim();
    let mut centroids = Vec::with_capacity(k * d);
    for &i in init {
        centroids.extend_from_slice(set.row(i));
    }
    let mut counts = vec![0u64; k];
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch_assign = vec![0usize; batch_size];
    for _ in 0..MINIBATCH_EPOCHS {
        // Fisher-Yates reshuffle per epoch
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for batch in order.chunks(batch_size) {
            for (slot, &i) in batch.iter().enumerate() {
                batch_assign[slot] = nearest_centroid(set.row(i), &centroids, k, d).0;
            }
            for (slot, &i) in batch.iter().enumerate() {
                let c = batch_assign[slot];
                counts[c] += 1;
                let eta = 1.0 / counts[c] as f64;
                let centroid = &mut centroids[c * d..(c + 1) * d];
                for (acc, v) in centroid.iter_mut().zip(set.row(i)) {
                    *acc += eta * (v - *acc);
                }
            }
        }
    }
    let assignment = assign_all(set, &centroids, k);
    finish(set, assignment, centroids, k)
}
