//! Query selection strategies: TypiClust and its ablation variants, plus
//! the random, uncertainty-family, and coreset baselines.
//!
//! Every strategy is a pure function of (inputs, seed): batches are
//! deterministic, contain only unlabeled indices, and never repeat an
//! index within a batch.

use crate::clustering::{choose_cluster_count, kmeans, minibatch_kmeans, ClusterAssignment, ClusterError};
use crate::model::{
    euclidean_distance, EmbeddingSet, PoolState, QueryBatch, SelectionDiagnostic, StrategyConfig,
    StrategyKind,
};
use crate::typicality::{argmax_typicality, argmin_typicality, knn_typicality, TypicalityError, TypicalityScores};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("unlabeled pool is empty")]
    EmptyPool,
    #[error("no model scores for example {0}")]
    MissingScores(usize),
    #[error("score row {0} does not sum to 1")]
    RowNotStochastic(usize),
    #[error("score entry at row {0} outside [0, 1]")]
    ScoreOutOfRange(usize),
    #[error("embeddings must be L2-normalized before typicality selection")]
    NotNormalized,
    #[error("strategy {0} requires a score matrix")]
    ScoresRequired(StrategyKind),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Typicality(#[from] TypicalityError),
}

/// Row-stochastic class-probability matrix produced by an external model;
/// input to the uncertainty-family baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    probs: Vec<f64>, // row-major n×c
    n: usize,
    c: usize,
}

impl ScoreMatrix {
    /// Validates entries in `[0, 1]` and row sums within `1e-6` of 1.
    pub fn validate(probs: Vec<f64>, classes: usize) -> Result<Self, StrategyError> {
        assert!(classes >= 1 && probs.len() % classes == 0, "bad score shape");
        let n = probs.len() / classes;
        for row in 0..n {
            let r = &probs[row * classes..(row + 1) * classes];
            if r.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(StrategyError::ScoreOutOfRange(row));
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(StrategyError::RowNotStochastic(row));
            }
        }
        Ok(Self { probs, n, c: classes })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn class_count(&self) -> usize {
        self.c
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.c..(i + 1) * self.c]
    }
}

/// One planned pick: the cluster to draw from, with its labeled count and
/// size at planning time.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPlanEntry {
    pub cluster: usize,
    pub labeled_count: usize,
    pub size: usize,
}

/// Ordered cluster targets for one selection round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterBudgetPlan {
    pub entries: Vec<ClusterPlanEntry>,
    /// Set when no cluster met the minimum-size floor and the floor was
    /// dropped to 1 for the remaining picks.
    pub floor_dropped: bool,
}

/// Plans which cluster each of the `budget` picks should come from:
/// fewest labeled points first, then largest size, then lowest cluster id,
/// virtually incrementing the labeled count after each pick. Only clusters
/// that still hold an unselected unlabeled member are eligible.
pub fn plan_clusters(
    assignment: &ClusterAssignment,
    pool: &PoolState,
    budget: usize,
    min_cluster_size: usize,
) -> Result<ClusterBudgetPlan, StrategyError> {
    if pool.unlabeled().is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    let k = assignment.cluster_count();
    let labeled_mask = pool.labeled_mask();
    let mut labeled_count = vec![0usize; k];
    let mut unlabeled_left = vec![0usize; k];
    for (i, &c) in assignment.assignment().iter().enumerate() {
        if labeled_mask[i] {
            labeled_count[c] += 1;
        } else {
            unlabeled_left[c] += 1;
        }
    }
    let sizes = assignment.sizes();
    let mut entries = Vec::with_capacity(budget);
    let mut floor = min_cluster_size;
    let mut floor_dropped = false;
    for _ in 0..budget {
        let pick = |floor: usize, labeled_count: &[usize]| -> Option<usize> {
            let mut best: Option<usize> = None;
            for c in 0..k {
                if unlabeled_left[c] == 0 || sizes[c] < floor {
                    continue;
                }
                best = match best {
                    None => Some(c),
                    Some(b) => {
                        let better = (labeled_count[c], std::cmp::Reverse(sizes[c]), c)
                            < (labeled_count[b], std::cmp::Reverse(sizes[b]), b);
                        Some(if better { c } else { b })
                    }
                };
            }
            best
        };
        let mut chosen = pick(floor, &labeled_count);
        if chosen.is_none() && floor > 1 {
            floor = 1;
            floor_dropped = true;
            chosen = pick(floor, &labeled_count);
        }
        let Some(c) = chosen else {
            break; // pool exhausted; the batch will be truncated
        };
        entries.push(ClusterPlanEntry {
            cluster: c,
            labeled_count: labeled_count[c],
            size: sizes[c],
        });
        labeled_count[c] += 1;
        unlabeled_left[c] -= 1;
    }
    Ok(ClusterBudgetPlan { entries, floor_dropped })
}

fn cluster_for_selection(
    set: &EmbeddingSet,
    pool: &PoolState,
    budget: usize,
    config: &StrategyConfig,
) -> Result<ClusterAssignment, StrategyError> {
    let k = choose_cluster_count(pool.labeled().len(), budget, config.max_clusters).min(set.len());
    let assignment = if k <= config.kmeans_exact_threshold {
        kmeans(set, k, config.seed)?
    } else {
        minibatch_kmeans(set, k, config.seed, config.minibatch_batch_size.max(k))?
    };
    Ok(assignment)
}

enum ClusterPick {
    MostTypical,
    LeastTypical,
    SeededRandom,
}

fn typicality_cluster_select(
    set: &EmbeddingSet,
    pool: &PoolState,
    budget: usize,
    config: &StrategyConfig,
    pick: ClusterPick,
) -> Result<QueryBatch, StrategyError> {
    if !set.is_normalized() {
        return Err(StrategyError::NotNormalized);
    }
    if pool.unlabeled().is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    let budget_eff = budget.min(pool.unlabeled().len());
    let assignment = cluster_for_selection(set, pool, budget, config)?;
    let plan = plan_clusters(&assignment, pool, budget_eff, config.min_cluster_size)?;

    let labeled_mask = pool.labeled_mask();
    let mut taken = vec![false; set.len()];
    let mut score_cache: HashMap<usize, Option<TypicalityScores>> = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut indices = Vec::with_capacity(plan.entries.len());
    let mut diagnostics = Vec::with_capacity(plan.entries.len());

    for entry in &plan.entries {
        let members = assignment.members(entry.cluster);
        let available: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&i| !labeled_mask[i] && !taken[i])
            .collect();
        debug_assert!(!available.is_empty(), "plan guarantees an available member");
        let scores = score_cache.entry(entry.cluster).or_insert_with(|| {
            if members.len() < 2 {
                None
            } else {
                // neighbors restricted to the cluster, k clamped to its size
                let k = config.k_neighbors.min(members.len());
                Some(knn_typicality(set, &members, k).expect("cluster has >= 2 members"))
            }
        });
        let chosen = match (&pick, scores.as_ref()) {
            (_, None) => available[0], // singleton cluster: nothing to score
            (ClusterPick::MostTypical, Some(s)) => argmax_typicality(s, &available)?,
            (ClusterPick::LeastTypical, Some(s)) => argmin_typicality(s, &available)?,
            (ClusterPick::SeededRandom, Some(_)) => {
                available[rng.random_range(0..available.len())]
            }
        };
        let typicality = match pick {
            ClusterPick::SeededRandom => None,
            _ => scores.as_ref().and_then(|s| s.score_of(chosen)),
        };
        diagnostics.push(SelectionDiagnostic {
            index: chosen,
            cluster: Some(entry.cluster),
            typicality,
            rank: indices.len(),
        });
        taken[chosen] = true;
        indices.push(chosen);
    }

    let kind = config.kind;
    Ok(QueryBatch {
        strategy: kind.name().to_string(),
        seed: config.seed,
        truncated: indices.len() < budget,
        indices,
        diagnostics,
    })
}

/// TypiClust: cluster everything into `|L| + B` clusters (capped), plan the
/// uncovered clusters, and take each planned cluster's most typical
/// unlabeled member.
pub fn typiclust_select(
    set: &EmbeddingSet,
    pool: &PoolState,
    budget: usize,
    config: &StrategyConfig,
) -> Result<QueryBatch, StrategyError> {
    typicality_cluster_select(set, pool, budget, config, ClusterPick::MostTypical)
}

/// Ablation: a seeded uniform draw from each planned cluster.
pub fn tpc_rand_select(
    set: &EmbeddingSet,
    pool: &PoolState,
    budget: usize,
    config: &StrategyConfig,
) -> Result<QueryBatch, StrategyError> {
    typicality_cluster_select(set, pool, budget, config, ClusterPick::SeededRandom)
}

/// Ablation: the most atypical member of each planned cluster.
pub fn tpc_inv_select(
    set: &EmbeddingSet,
    pool: &PoolState,
    budget: usize,
    config: &StrategyConfig,
) -> Result<QueryBatch, StrategyError> {
    typicality_cluster_select(set, pool, budget, config, ClusterPick::LeastTypical)
}

/// Ablation: greedy global typicality without any clustering.
pub fn tpc_noclust_select(
    set: &EmbeddingSet,
    pool: &PoolState,
    budget: usize,
    config: &StrategyConfig,
) -> Result<QueryBatch, StrategyError> {
    if !set.is_normalized() {
        return Err(StrategyError::NotNormalized);
    }
    if pool.unlabeled().is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    let budget_eff = budget.min(pool.unlabeled().len());
    let all: Vec<usize> = (0..set.len()).collect();
    let scores = if set.len() >= 2 {
        Some(knn_typicality(set, &all, config.k_neighbors)?)
    } else {
        None
    };
    let mut ranked: Vec<usize> = pool.unlabeled().to_vec();
    if let Some(s) = &scores {
        ranked.sort_by(|&a, &b| {
            let sa = s.score_of(a).expect("scored all points");
            let sb = s.score_of(b).expect("scored all points");
            sb.total_cmp(&sa).then(a.cmp(&b))
        });
    }
    ranked.truncate(budget_eff);
    let diagnostics = ranked
        .iter()
        .enumerate()
        .map(|(rank, &index)| SelectionDiagnostic {
            index,
            cluster: None,
            typicality: scores.as_ref().and_then(|s| s.score_of(index)),
            rank,
        })
        .collect();
    Ok(QueryBatch {
        strategy: StrategyKind::TpcNoclust.name().to_string(),
        seed: config.seed,
        truncated: ranked.len() < budget,
        indices: ranked,
        diagnostics,
    })
}

/// Seeded uniform sample without replacement from the unlabeled pool.
pub fn random_select(
    pool: &PoolState,
    budget: usize,
    seed: u64,
) -> Result<QueryBatch, StrategyError> {
    if pool.unlabeled().is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    let mut candidates = pool.unlabeled().to_vec();
    let budget_eff = budget.min(candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..budget_eff {
        let j = rng.random_range(i..candidates.len());
        candidates.swap(i, j);
    }
    candidates.truncate(budget_eff);
    let diagnostics = candidates
        .iter()
        .enumerate()
        .map(|(rank, &index)| SelectionDiagnostic {
            index,
            cluster: None,
            typicality: None,
            rank,
        })
        .collect();
    Ok(QueryBatch {
        strategy: StrategyKind::Random.name().to_string(),
        seed,
        truncated: budget_eff < budget,
        indices: candidates,
        diagnostics,
    })
}

/// Uncertainty-family ranking over externally produced class probabilities:
/// lowest max softmax, lowest top-two margin, or highest entropy.
pub fn uncertainty_family_select(
    scores: &ScoreMatrix,
    pool: &PoolState,
    budget: usize,
    kind: StrategyKind,
) -> Result<QueryBatch, StrategyError> {
    assert!(kind.needs_scores(), "not an uncertainty-family strategy");
    if pool.unlabeled().is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    if let Some(&missing) = pool.unlabeled().iter().find(|&&i| i >= scores.len()) {
        return Err(StrategyError::MissingScores(missing));
    }
    // lower key = queried earlier
    let key = |i: usize| -> f64 {
        let row = scores.row(i);
        match kind {
            StrategyKind::Uncertainty => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            StrategyKind::Margin => {
                let (mut top, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for &p in row {
                    if p > top {
                        second = top;
                        top = p;
                    } else if p > second {
                        second = p;
                    }
                }
                top - second
            }
            StrategyKind::Entropy => {
                let entropy: f64 = row
                    .iter()
                    .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
                    .sum();
                -entropy
            }
            _ => unreachable!(),
        }
    };
    let mut ranked: Vec<usize> = pool.unlabeled().to_vec();
    ranked.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    let budget_eff = budget.min(ranked.len());
    ranked.truncate(budget_eff);
    let diagnostics = ranked
        .iter()
        .enumerate()
        .map(|(rank, &index)| SelectionDiagnostic {
            index,
            cluster: None,
            typicality: None,
            rank,
        })
        .collect();
    Ok(QueryBatch {
        strategy: kind.name().to_string(),
        seed: 0,
        truncated: budget_eff < budget,
        indices: ranked,
        diagnostics,
    })
}

/// Greedy k-center coverage: each pick maximizes its minimum distance to
/// the labeled set plus everything already selected. The cold start
/// (`L = ∅`) picks the point farthest from the global centroid, so the
/// strategy needs no seed at all.
pub fn coreset_select(
    set: &EmbeddingSet,
    pool: &PoolState,
    budget: usize,
) -> Result<QueryBatch, StrategyError> {
    if pool.unlabeled().is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    let budget_eff = budget.min(pool.unlabeled().len());
    let candidates = pool.unlabeled();
    let mut picked = vec![false; candidates.len()];
    let mut indices = Vec::with_capacity(budget_eff);
    let mut diagnostics = Vec::with_capacity(budget_eff);
    let mut min_dist: Vec<f64>;
    if pool.labeled().is_empty() {
        // deterministic cold start: farthest unlabeled point from the
        // global centroid, ties to the lowest index
        let d = set.dim();
        let mut centroid = vec![0.0f64; d];
        for row in set.rows() {
            for (acc, v) in centroid.iter_mut().zip(row) {
                *acc += v;
            }
        }
        for v in centroid.iter_mut() {
            *v /= set.len() as f64;
        }
        let mut first = 0;
        let mut first_dist = f64::NEG_INFINITY;
        for (pos, &cand) in candidates.iter().enumerate() {
            let dist = euclidean_distance(set.row(cand), &centroid);
            if dist > first_dist {
                first_dist = dist;
                first = pos;
            }
        }
        picked[first] = true;
        let chosen = candidates[first];
        diagnostics.push(SelectionDiagnostic {
            index: chosen,
            cluster: None,
            typicality: None,
            rank: 0,
        });
        indices.push(chosen);
        // only the selected set covers from here on
        min_dist = candidates
            .iter()
            .map(|&i| euclidean_distance(set.row(i), set.row(chosen)))
            .collect();
    } else {
        min_dist = candidates
            .iter()
            .map(|&i| {
                pool.labeled()
                    .iter()
                    .map(|&l| euclidean_distance(set.row(i), set.row(l)))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
    }
    for rank in indices.len()..budget_eff {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &cand) in candidates.iter().enumerate() {
            if picked[pos] {
                continue;
            }
            let better = match best {
                None => true,
                Some((bpos, bdist)) => {
                    min_dist[pos] > bdist || (min_dist[pos] == bdist && cand < candidates[bpos])
                }
            };
            if better {
                best = Some((pos, min_dist[pos]));
            }
        }
        let (pos, _) = best.expect("candidates remain");
        picked[pos] = true;
        let chosen = candidates[pos];
        for (other_pos, &other) in candidates.iter().enumerate() {
            if !picked[other_pos] {
                let d = euclidean_distance(set.row(other), set.row(chosen));
                if d < min_dist[other_pos] {
                    min_dist[other_pos] = d;
                }
            }
        }
        diagnostics.push(SelectionDiagnostic {
            index: chosen,
            cluster: None,
            typicality: None,
            rank,
        });
        indices.push(chosen);
    }
    Ok(QueryBatch {
        strategy: StrategyKind::Coreset.name().to_string(),
        seed: 0,
        truncated: budget_eff < budget,
        indices,
        diagnostics,
    })
}

/// Dispatches an embeddings-only strategy by kind. Uncertainty-family
/// kinds are rejected here; they go through
/// [`uncertainty_family_select`] with a score matrix.
pub fn select(
    set: &EmbeddingSet,
    pool: &PoolState,
    budget: usize,
    config: &StrategyConfig,
) -> Result<QueryBatch, StrategyError> {
    match config.kind {
        StrategyKind::TypiclustRp => typiclust_select(set, pool, budget, config),
        StrategyKind::TpcRand => tpc_rand_select(set, pool, budget, config),
        StrategyKind::TpcInv => tpc_inv_select(set, pool, budget, config),
        StrategyKind::TpcNoclust => tpc_noclust_select(set, pool, budget, config),
        StrategyKind::Random => random_select(pool, budget, config.seed),
        StrategyKind::Coreset => coreset_select(set, pool, budget),
        kind => Err(StrategyError::ScoresRequired(kind)),
    }
}

/// Checks a TypiClust batch against its own diagnostics: replays the
/// seeded clustering and asserts every pick is the typicality argmax among
/// the unlabeled, not-yet-taken members of its recorded cluster.
pub fn verify_typiclust_batch(
    set: &EmbeddingSet,
    pool: &PoolState,
    budget: usize,
    config: &StrategyConfig,
    batch: &QueryBatch,
) -> Result<bool, StrategyError> {
    let assignment = cluster_for_selection(set, pool, budget, config)?;
    let labeled_mask = pool.labeled_mask();
    let mut taken = vec![false; set.len()];
    for diag in &batch.diagnostics {
        let Some(cluster) = diag.cluster else {
            return Ok(false);
        };
        if cluster >= assignment.cluster_count() || assignment.cluster_of(diag.index) != cluster {
            return Ok(false);
        }
        let members = assignment.members(cluster);
        let available: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&i| !labeled_mask[i] && !taken[i])
            .collect();
        if members.len() >= 2 {
            let k = config.k_neighbors.min(members.len());
            let scores = knn_typicality(set, &members, k)?;
            let best = argmax_typicality(&scores, &available)?;
            if best != diag.index {
                return Ok(false);
            }
            match diag.typicality {
                Some(reported) if reported == scores.score_of(diag.index).unwrap() => {}
                _ => return Ok(false),
            }
        } else if available != [diag.index] {
            return Ok(false);
        }
        taken[diag.index] = true;
    }
    Ok(true)
}
