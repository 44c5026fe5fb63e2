//! Monte-Carlo realization of the two-region linear-classifier mixture and
//! the 1-NN coverage analysis.
//!
//! Each region is a binary problem in `dim` dimensions, Gaussian along
//! every axis except that the signed component along the separating
//! direction is pushed outside `margin/2`, so classes are linearly
//! separable with the configured margin. A smaller margin makes a region
//! slower to learn; the second region's margin is calibrated so the
//! measured error curves satisfy `E2(m) ≈ E1(alpha * m)`.

use crate::model::derive_seed;
use crate::parallel::parallel_map_range;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinearError {
    #[error("training matrix is all zeros")]
    DegenerateData,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("margin calibration missed the target: fitted alpha {fitted} vs target {target}")]
    CalibrationFailed { fitted: f64, target: f64 },
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("only {have} candidates for {need} selections")]
    TooFewCandidates { have: usize, need: usize },
}

/// Minimum-norm least-squares separator for labeled points.
///
/// `points` is row-major `m x dim`, `labels` hold ±1. Full-rank systems go
/// through the normal equations on the smaller Gram matrix; rank-deficient
/// ones fall back to the SVD pseudo-inverse with singular values below
/// `1e-10 · σ_max` treated as zero, which yields the minimum-norm
/// interpolator.
pub fn least_squares_separator(
    points: &[f64],
    dim: usize,
    labels: &[f64],
) -> Result<Vec<f64>, LinearError> {
    assert!(dim >= 1 && points.len() % dim == 0);
    let m = points.len() / dim;
    assert_eq!(m, labels.len());
    assert!(m >= 1, "need at least one training point");
    if points.iter().all(|&v| v == 0.0) {
        return Err(LinearError::DegenerateData);
    }
    let a = DMatrix::from_row_slice(m, dim, points);
    let y = DVector::from_column_slice(labels);
    if m >= dim {
        // w = (AᵀA)⁻¹ Aᵀ y
        let gram = a.transpose() * &a;
        let rhs = a.transpose() * &y;
        if let Some(chol) = gram.clone().cholesky() {
            return Ok(chol.solve(&rhs).iter().copied().collect());
        }
    } else {
        // minimum-norm solution w = Aᵀ (AAᵀ)⁻¹ y
        let gram = &a * a.transpose();
        if let Some(chol) = gram.clone().cholesky() {
            let z = chol.solve(&y);
            return Ok((a.transpose() * z).iter().copied().collect());
        }
    }
    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    if sigma_max == 0.0 {
        return Err(LinearError::DegenerateData);
    }
    let w = svd
        .solve(&y, 1e-10 * sigma_max)
        .map_err(|_| LinearError::DegenerateData)?;
    Ok(w.iter().copied().collect())
}

/// Experiment configuration; defaults follow the reference setup
/// (100 dimensions, p = 0.9, alpha = 0.2).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMixtureConfig {
    pub dim: usize,
    pub p: f64,
    pub alpha: f64,
    /// Class margin of the easier region; the harder region's margin comes
    /// out of calibration.
    pub margin_r1: f64,
    /// Norm bound on sampled points.
    pub bound: f64,
    pub m_grid: Vec<f64>,
    /// Bias: the easier region's expected count moves by +delta (mode +Δ)
    /// or -delta (mode -Δ).
    pub delta: f64,
    pub repetitions: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl LinearMixtureConfig {
    pub fn defaults(seed: u64) -> Self {
        // The grid keeps every region count below ~0.6·dim: least-squares
        // interpolation degrades as the count approaches the dimension,
        // which would break the decreasing-error assumption.
        Self {
            dim: 100,
            p: 0.9,
            alpha: 0.2,
            margin_r1: 2.0,
            bound: 60.0,
            m_grid: vec![10.0, 12.0, 15.0, 18.0, 22.0, 27.0, 33.0, 40.0, 48.0],
            delta: 1.0,
            repetitions: 1000,
            test_size: 10_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), LinearError> {
        if self.dim < 1 {
            return Err(LinearError::InvalidConfig("dim must be >= 1".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(LinearError::InvalidConfig(format!("p={} outside (0,1)", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha < self.p / (1.0 - self.p)) {
            return Err(LinearError::InvalidConfig(format!(
                "alpha={} violates alpha < p/(1-p)",
                self.alpha
            )));
        }
        if self.margin_r1 <= 0.0 {
            return Err(LinearError::InvalidConfig("margin must be positive".into()));
        }
        if self.repetitions < 1 {
            return Err(LinearError::InvalidConfig("repetitions must be >= 1".into()));
        }
        if self.test_size < 1 {
            return Err(LinearError::InvalidConfig("test_size must be >= 1".into()));
        }
        if self.delta < 0.0 {
            return Err(LinearError::InvalidConfig("delta must be >= 0".into()));
        }
        if self.m_grid.is_empty() {
            return Err(LinearError::InvalidConfig("m grid is empty".into()));
        }
        for &m in &self.m_grid {
            // tolerate float fuzz like (1 - 0.9) * 10 - 1 = -2e-16
            let slack = 1e-9 * m.max(1.0);
            if self.p * m - self.delta < -slack || (1.0 - self.p) * m - self.delta < -slack {
                return Err(LinearError::InvalidConfig(format!(
                    "grid point m={m} leaves a negative region count under bias {}",
                    self.delta
                )));
            }
        }
        Ok(())
    }
}

/// Draws `count` points of one region: ±1 labels, the first coordinate
/// pushed outside `margin/2` on the label's side, the rest standard normal.
/// Points are redrawn on the (rare) norm-bound violation.
fn sample_region(
    rng: &mut ChaCha8Rng,
    dim: usize,
    count: usize,
    margin: f64,
    bound: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut points = Vec::with_capacity(count * dim);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        loop {
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let g: f64 = StandardNormal.sample(rng);
            let start = points.len();
            points.push(y * (margin / 2.0 + g.abs()));
            for _ in 1..dim {
                points.push(StandardNormal.sample(rng));
            }
            let norm_sq: f64 = points[start..].iter().map(|v| v * v).sum();
            if norm_sq.sqrt() <= bound {
                labels.push(y);
                break;
            }
            points.truncate(start);
        }
    }
    (points, labels)
}

/// 0-1 error of `w` on a labeled test set; `sign(0)` counts as wrong for
/// a nonzero label.
fn classifier_error(w: &[f64], points: &[f64], labels: &[f64], dim: usize) -> f64 {
    let mut wrong = 0usize;
    for (row, &y) in points.chunks_exact(dim).zip(labels) {
        let score: f64 = row.iter().zip(w).map(|(x, wi)| x * wi).sum();
        if score * y <= 0.0 {
            wrong += 1;
        }
    }
    wrong as f64 / labels.len() as f64
}

/// Stochastic rounding preserving expectation, driven by one uniform draw
/// so nearby targets round comonotonically.
fn stochastic_round(x: f64, u: f64) -> usize {
    debug_assert!(x >= 0.0);
    let base = x.floor();
    let n = base + if u < x - base { 1.0 } else { 0.0 };
    n as usize
}

/// Mean 0-1 error of a single region trained on `m` points, averaged over
/// `reps` repetitions with fresh test draws.
pub fn single_region_error(
    dim: usize,
    margin: f64,
    bound: f64,
    m: usize,
    reps: usize,
    test_size: usize,
    seed: u64,
) -> f64 {
    let totals = parallel_map_range(reps, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        let (test, test_labels) = sample_region(&mut rng, dim, test_size, margin, bound);
        if m == 0 {
            return 0.5;
        }
        let (train, train_labels) = sample_region(&mut rng, dim, m, margin, bound);
        match least_squares_separator(&train, dim, &train_labels) {
            Ok(w) => classifier_error(&w, &test, &test_labels, dim),
            Err(_) => 0.5,
        }
    });
    totals.iter().sum::<f64>() / reps as f64
}

/// Least-squares slope of `ln E(m)` over a fixed sweep; points saturated
/// near chance or starved of test errors are dropped.
fn fit_decay_rate(
    dim: usize,
    margin: f64,
    bound: f64,
    sweep: &[usize],
    reps: usize,
    test_size: usize,
    seed: u64,
) -> Result<f64, LinearError> {
    let floor = 5.0 / (reps as f64 * test_size as f64);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &m) in sweep.iter().enumerate() {
        let err = single_region_error(dim, margin, bound, m, reps, test_size, derive_seed(seed, i as u64));
        if err > floor && err < 0.47 {
            xs.push(m as f64);
            ys.push(err.ln());
        }
    }
    if xs.len() < 3 {
        return Err(LinearError::InvalidConfig(format!(
            "decay fit for margin {margin} kept only {} sweep points",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    Ok(-(sxy / sxx))
}

/// Outcome of margin calibration for the harder region.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub margin_r2: f64,
    pub fitted_alpha: f64,
    pub rate_r1: f64,
    pub rate_r2: f64,
}

/// Tolerance on the fitted alpha ratio.
pub const ALPHA_TOLERANCE: f64 = 0.05;

const CALIBRATION_SWEEP: [usize; 7] = [3, 5, 8, 12, 18, 27, 40];
const CALIBRATION_REPS: usize = 160;
const CALIBRATION_TEST: usize = 3000;

/// Sweep points for the decay fit, capped below ~0.6 of the dimension:
/// least-squares error turns back up as the sample count approaches the
/// dimension, which would corrupt the fitted rate.
fn calibration_sweep(dim: usize) -> Vec<usize> {
    let cap = ((0.6 * dim as f64) as usize).max(8);
    CALIBRATION_SWEEP
        .iter()
        .copied()
        .filter(|&m| m <= cap)
        .collect()
}

/// Finds the harder region's margin by bisection so that the fitted decay
/// ratio of the two regions' log-error curves lands on `alpha`.
pub fn calibrate_second_margin(cfg: &LinearMixtureConfig) -> Result<Calibration, LinearError> {
    cfg.validate()?;
    let sweep = calibration_sweep(cfg.dim);
    let rate_r1 = fit_decay_rate(
        cfg.dim,
        cfg.margin_r1,
        cfg.bound,
        &sweep,
        CALIBRATION_REPS,
        CALIBRATION_TEST,
        derive_seed(cfg.seed, 0xCA11),
    )?;
    let mut lo = 0.0f64;
    let mut hi = cfg.margin_r1;
    let mut best: Option<(f64, f64, f64)> = None; // (margin, alpha_hat, rate)
    for step in 0..14 {
        let mid = 0.5 * (lo + hi);
        let rate = fit_decay_rate(
            cfg.dim,
            mid,
            cfg.bound,
            &sweep,
            CALIBRATION_REPS,
            CALIBRATION_TEST,
            derive_seed(cfg.seed, 0xCA12 + step),
        )?;
        let alpha_hat = rate / rate_r1;
        let better = match best {
            Some((_, prev, _)) => (alpha_hat - cfg.alpha).abs() < (prev - cfg.alpha).abs(),
            None => true,
        };
        if better {
            best = Some((mid, alpha_hat, rate));
        }
        if (alpha_hat - cfg.alpha).abs() <= ALPHA_TOLERANCE * 0.6 {
            break;
        }
        if alpha_hat > cfg.alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (margin_r2, fitted_alpha, rate_r2) = best.expect("at least one bisection step");
    if (fitted_alpha - cfg.alpha).abs() > ALPHA_TOLERANCE {
        return Err(LinearError::CalibrationFailed {
            fitted: fitted_alpha,
            target: cfg.alpha,
        });
    }
    Ok(Calibration {
        margin_r2,
        fitted_alpha,
        rate_r1,
        rate_r2,
    })
}

/// Bias direction of one experiment row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    Plus,
    Zero,
    Minus,
}

impl DeltaMode {
    pub const ALL: [DeltaMode; 3] = [DeltaMode::Plus, DeltaMode::Zero, DeltaMode::Minus];

    pub fn name(self) -> &'static str {
        match self {
            DeltaMode::Plus => "plus",
            DeltaMode::Zero => "zero",
            DeltaMode::Minus => "minus",
        }
    }
}

/// One table row: mean mixture error for a (sample size, bias mode) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCell {
    pub m: f64,
    pub mode: DeltaMode,
    pub mean_error: f64,
    pub std_error: f64,
    pub repetitions: usize,
}

/// Paired per-repetition differences against the unbiased mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDifference {
    pub m: f64,
    /// mean and standard error of error(+Δ) - error(0)
    pub plus_vs_zero: (f64, f64),
    /// mean and standard error of error(-Δ) - error(0)
    pub minus_vs_zero: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureExperimentTable {
    pub cells: Vec<ExperimentCell>,
    pub paired: Vec<PairedDifference>,
    pub calibration: Calibration,
}

impl MixtureExperimentTable {
    pub fn cell(&self, m: f64, mode: DeltaMode) -> &ExperimentCell {
        self.cells
            .iter()
            .find(|c| c.m == m && c.mode == mode)
            .expect("cell exists for every grid point and mode")
    }
}

/// Runs the biased-sampling experiment: per repetition, draw region counts
/// for each bias mode (stochastically rounded from `p·m ± Δ`), fit one
/// least-squares separator per region, score both on fresh region test
/// draws shared across modes and grid points, and combine with weights
/// `(p, 1-p)`. Counts share one uniform and training pools are nested
/// prefixes, so the paired differences stay low-variance.
pub fn mixture_error_experiment(
    cfg: &LinearMixtureConfig,
) -> Result<MixtureExperimentTable, LinearError> {
    cfg.validate()?;
    let calibration = calibrate_second_margin(cfg)?;
    Ok(run_experiment_with_margins(cfg, calibration))
}

fn run_experiment_with_margins(
    cfg: &LinearMixtureConfig,
    calibration: Calibration,
) -> MixtureExperimentTable {
    let margins = [cfg.margin_r1, calibration.margin_r2];
    let grid = cfg.m_grid.clone();
    // per rep: [m index][mode index] mixture error
    let per_rep: Vec<Vec<[f64; 3]>> = parallel_map_range(cfg.repetitions, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xE0 + r as u64));
        let mut tests = Vec::with_capacity(2);
        for &margin in &margins {
            tests.push(sample_region(&mut rng, cfg.dim, cfg.test_size, margin, cfg.bound));
        }
        let mut rows = Vec::with_capacity(grid.len());
        for &m in &grid {
            let mut errors = [[0.5f64; 3]; 2]; // [region][mode]
            for (region, &margin) in margins.iter().enumerate() {
                let weights = if region == 0 { cfg.p } else { 1.0 - cfg.p };
                let base = weights * m;
                let signs = if region == 0 { [1.0, 0.0, -1.0] } else { [-1.0, 0.0, 1.0] };
                let u: f64 = rng.random();
                let counts: Vec<usize> = signs
                    .iter()
                    .map(|s| stochastic_round((base + s * cfg.delta).max(0.0), u))
                    .collect();
                let pool_size = counts.iter().copied().max().unwrap();
                let (pool, pool_labels) =
                    sample_region(&mut rng, cfg.dim, pool_size, margin, cfg.bound);
                let (test, test_labels) = &tests[region];
                for (mode, &count) in counts.iter().enumerate() {
                    errors[region][mode] = if count == 0 {
                        0.5
                    } else {
                        match least_squares_separator(
                            &pool[..count * cfg.dim],
                            cfg.dim,
                            &pool_labels[..count],
                        ) {
                            Ok(w) => classifier_error(&w, test, test_labels, cfg.dim),
                            Err(_) => 0.5,
                        }
                    };
                }
            }
            let mut row = [0.0f64; 3];
            for mode in 0..3 {
                row[mode] = cfg.p * errors[0][mode] + (1.0 - cfg.p) * errors[1][mode];
            }
            rows.push(row);
        }
        rows
    });

    let reps = cfg.repetitions;
    let mut cells = Vec::with_capacity(grid.len() * 3);
    let mut paired = Vec::with_capacity(grid.len());
    for (mi, &m) in grid.iter().enumerate() {
        let mut mode_stats = Vec::with_capacity(3);
        for mode in 0..3 {
            let values: Vec<f64> = per_rep.iter().map(|rep| rep[mi][mode]).collect();
            let (mean, se) = mean_and_stderr(&values);
            mode_stats.push((mean, se));
            cells.push(ExperimentCell {
                m,
                mode: DeltaMode::ALL[mode],
                mean_error: mean,
                std_error: se,
                repetitions: reps,
            });
        }
        let plus_diffs: Vec<f64> = per_rep.iter().map(|rep| rep[mi][0] - rep[mi][1]).collect();
        let minus_diffs: Vec<f64> = per_rep.iter().map(|rep| rep[mi][2] - rep[mi][1]).collect();
        paired.push(PairedDifference {
            m,
            plus_vs_zero: mean_and_stderr(&plus_diffs),
            minus_vs_zero: mean_and_stderr(&minus_diffs),
        });
    }
    MixtureExperimentTable {
        cells,
        paired,
        calibration,
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

// ---- 1-NN coverage analysis ----

/// Configuration of the k-class 1-NN setting: classes separated by at
/// least `separation`, correctness balls of radius `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneNnConfig {
    pub class_count: usize,
    pub separation: f64,
    pub radius: f64,
}

impl OneNnConfig {
    pub fn validate(&self) -> Result<(), LinearError> {
        if self.class_count < 2 {
            return Err(LinearError::InvalidConfig("need at least 2 classes".into()));
        }
        if self.separation <= 0.0 || self.radius <= 0.0 {
            return Err(LinearError::InvalidConfig(
                "separation and radius must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Volume of the `dim`-ball of the given radius.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    // pi^{d/2} / Γ(d/2 + 1) * r^d, with Γ evaluated by the half-integer
    // recurrence
    let half = dim as f64 / 2.0;
    let mut gamma = if dim % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    while x < half + 0.5 {
        gamma *= x;
        x += 1.0;
    }
    std::f64::consts::PI.powf(half) / gamma * radius.powi(dim as i32)
}

/// First-order 1-NN loss estimate for a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct OneNnLossEstimate {
    pub loss: f64,
    /// `Σ f(x_i) · v`: estimated covered probability mass.
    pub coverage: f64,
    /// The raw estimate went negative before clamping: the ball radius is
    /// too large for the first-order expansion.
    pub radius_too_large: bool,
}

/// `(k-1)/k · (1 - Σ f(x_i)·v)`, clamped to `[0, (k-1)/k]`.
pub fn one_nn_loss_estimate<F>(
    training: &[f64],
    dim: usize,
    cfg: &OneNnConfig,
    density: F,
) -> Result<OneNnLossEstimate, LinearError>
where
    F: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    assert!(training.len() % dim == 0);
    let v = ball_volume(dim, cfg.radius);
    let coverage: f64 = training.chunks_exact(dim).map(|x| density(x) * v).sum();
    let chance = (cfg.class_count as f64 - 1.0) / cfg.class_count as f64;
    let raw = chance * (1.0 - coverage);
    Ok(OneNnLossEstimate {
        loss: raw.clamp(0.0, chance),
        coverage,
        radius_too_large: raw < 0.0,
    })
}

/// Monte-Carlo 0-1 loss of the covering classifier: a test point inside
/// some training ball is classified correctly (classes are separated by
/// more than the ball radius), anything else gets a uniform random guess.
pub fn one_nn_monte_carlo_loss<S>(
    training: &[f64],
    dim: usize,
    cfg: &OneNnConfig,
    mut sample_test: S,
    draws: usize,
    seed: u64,
) -> f64
where
    S: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wrong = 0usize;
    for _ in 0..draws {
        let x = sample_test(&mut rng);
        let covered = training
            .chunks_exact(dim)
            .any(|t| crate::model::euclidean_distance(t, &x) <= cfg.radius);
        if !covered {
            // uniform guess over k classes: correct with probability 1/k
            let guess_correct = rng.random_range(0..cfg.class_count) == 0;
            if !guess_correct {
                wrong += 1;
            }
        }
    }
    wrong as f64 / draws as f64
}

/// Greedy max-density selection with a separation constraint; when no
/// candidate clears the constraint the separation is halved and the
/// relaxation is counted.
#[derive(Debug, Clone, PartialEq)]
pub struct DiverseSelection {
    pub indices: Vec<usize>,
    pub relaxations: usize,
}

pub fn max_density_diverse_select(
    candidates: &[f64],
    dim: usize,
    densities: &[f64],
    m: usize,
    min_separation: f64,
) -> Result<DiverseSelection, LinearError> {
    assert!(candidates.len() % dim == 0);
    let n = candidates.len() / dim;
    assert_eq!(n, densities.len());
    if n == 0 {
        return Err(LinearError::EmptyCandidates);
    }
    if n < m {
        return Err(LinearError::TooFewCandidates { have: n, need: m });
    }
    // density-descending order, ties to the lowest index
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| densities[b].total_cmp(&densities[a]).then(a.cmp(&b)));
    let mut taken = vec![false; n];
    let mut indices = Vec::with_capacity(m);
    let mut separation = min_separation;
    let mut relaxations = 0usize;
    while indices.len() < m {
        let next = order.iter().copied().find(|&i| {
            !taken[i]
                && indices.iter().all(|&j: &usize| {
                    crate::model::euclidean_distance(
                        &candidates[i * dim..(i + 1) * dim],
                        &candidates[j * dim..(j + 1) * dim],
                    ) >= separation
                })
        });
        match next {
            Some(i) => {
                taken[i] = true;
                indices.push(i);
            }
            None if separation > 1e-12 => {
                separation /= 2.0;
                relaxations += 1;
            }
            None => {
                // coincident leftovers: take them by density order
                let i = order.iter().copied().find(|&i| !taken[i]).expect("m <= n");
                taken[i] = true;
                indices.push(i);
            }
        }
    }
    Ok(DiverseSelection { indices, relaxations })
}
