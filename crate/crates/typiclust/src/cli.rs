//! Command-line surface: selection, theory simulation, evaluation, and
//! the multi-seed experiment driver.
//!
//! All outputs are deterministic functions of the input files and flags;
//! wall-clock timing goes to a sidecar log, never into data payloads.
//! Exit codes: 0 success, 2 validation failure, 3 numerical failure.

use crate::clustering::ClusterError;
use crate::io::{self, FormatError};
use crate::linear::{LinearError, LinearMixtureConfig};
use crate::metrics::{self, ExperimentConfig, MetricsError, ProbeKind};
use crate::model::{EmbeddingSet, ModelError, PoolState, StrategyConfig, StrategyKind};
use crate::strategies::{self, StrategyError};
use crate::theory::{self, ErrorModel, MixtureConfig, TheoryError};
use crate::typicality::TypicalityError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Stable machine-readable code for the stderr error payload.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Format(e) => match e {
                FormatError::Io(_) => "Io",
                FormatError::BadMagic { .. } => "BadMagic",
                FormatError::Truncated { .. } => "Truncated",
                FormatError::TrailingBytes { .. } => "TrailingBytes",
                FormatError::CountMismatch { .. } => "CountMismatch",
                FormatError::NonStochasticRow { .. } => "NonStochasticRow",
                FormatError::Csv { .. } => "CsvParse",
                FormatError::Json(_) => "JsonParse",
                FormatError::Model(e) => model_code(e),
                FormatError::Strategy(e) => strategy_code(e),
            },
            CliError::Model(e) => model_code(e),
            CliError::Strategy(e) => strategy_code(e),
            CliError::Theory(e) => match e {
                TheoryError::InvalidModel(_) => "InvalidModel",
                TheoryError::InvalidMixture { .. } => "InvalidMixture",
                TheoryError::BiasOutOfRange { .. } => "BiasOutOfRange",
                TheoryError::DerivativeUnavailable(_) => "DerivativeUnavailable",
                TheoryError::OutsideGrid(_) => "OutsideGrid",
                TheoryError::GridTooSmall(_) => "GridTooSmall",
                TheoryError::NoCrossing => "NoCrossing",
            },
            CliError::Linear(e) => match e {
                LinearError::DegenerateData => "DegenerateData",
                LinearError::InvalidConfig(_) => "InvalidConfig",
                LinearError::CalibrationFailed { .. } => "CalibrationFailed",
                LinearError::EmptyCandidates => "EmptyCandidates",
                LinearError::TooFewCandidates { .. } => "TooFewCandidates",
            },
            CliError::Metrics(e) => match e {
                MetricsError::ClassCountMismatch { .. } => "ClassCountMismatch",
                MetricsError::EmptyLabeledSet => "EmptyLabeledSet",
                MetricsError::MissingLabel(_) => "MissingLabel",
                MetricsError::NoLabels => "NoLabels",
                MetricsError::Strategy(e) => strategy_code(e),
                MetricsError::Model(e) => model_code(e),
            },
            CliError::Usage(_) => "Usage",
        }
    }

    /// 2 for validation problems, 3 for numerical failures at runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Linear(LinearError::DegenerateData)
            | CliError::Linear(LinearError::CalibrationFailed { .. })
            | CliError::Theory(TheoryError::DerivativeUnavailable(_))
            | CliError::Theory(TheoryError::OutsideGrid(_))
            | CliError::Theory(TheoryError::NoCrossing) => 3,
            CliError::Strategy(StrategyError::Typicality(_))
            | CliError::Strategy(StrategyError::Cluster(ClusterError::BatchTooSmall { .. })) => 3,
            _ => 2,
        }
    }
}

fn model_code(e: &ModelError) -> &'static str {
    match e {
        ModelError::NonFiniteEntry { .. } => "NonFiniteEntry",
        ModelError::DuplicateId(_) => "DuplicateId",
        ModelError::LabelOutOfRange(_) => "LabelOutOfRange",
        ModelError::ZeroNormRow(_) => "ZeroNormRow",
        ModelError::BadShape { .. } => "BadShape",
        ModelError::LengthMismatch { .. } => "LengthMismatch",
        ModelError::IndexOutOfRange(..) => "IndexOutOfRange",
        ModelError::AlreadyLabeled(_) => "AlreadyLabeled",
        ModelError::DuplicateIndex(_) => "DuplicateIndex",
        ModelError::UnknownStrategy(_) => "UnknownStrategy",
    }
}

fn strategy_code(e: &StrategyError) -> &'static str {
    match e {
        StrategyError::EmptyPool => "EmptyPool",
        StrategyError::MissingScores(_) => "MissingScores",
        StrategyError::RowNotStochastic(_) => "RowNotStochastic",
        StrategyError::ScoreOutOfRange(_) => "ScoreOutOfRange",
        StrategyError::NotNormalized => "NotNormalized",
        StrategyError::ScoresRequired(_) => "ScoresRequired",
        StrategyError::Cluster(ClusterError::KTooLarge { .. }) => "KTooLarge",
        StrategyError::Cluster(ClusterError::BatchTooSmall { .. }) => "BatchTooSmall",
        StrategyError::Typicality(TypicalityError::SubsetTooSmall(_)) => "SubsetTooSmall",
        StrategyError::Typicality(TypicalityError::EmptyCandidates) => "EmptyCandidates",
        StrategyError::Typicality(TypicalityError::UnscoredCandidate(_)) => "UnscoredCandidate",
    }
}

#[derive(Parser, Debug)]
#[command(name = "typiclust", version, about = "Low-budget active learning over embeddings, with a mixture-model phase-transition simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Select a query batch from an embedding file.
    Select(SelectArgs),
    /// Numerical simulations of the two-region mixture theory.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Evaluate a query batch or an experiment record against labels.
    Evaluate(EvaluateArgs),
    /// Run a multi-seed, multi-iteration selection experiment.
    Iterate(IterateArgs),
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// EMB1 binary or CSV embedding file.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Strategy name (typiclust_rp, tpc_rand, tpc_inv, tpc_noclust,
    /// random, uncertainty, margin, entropy, coreset).
    #[arg(long)]
    pub strategy: String,
    #[arg(long)]
    pub budget: usize,
    /// Text file of already-labeled indices, one per line.
    #[arg(long)]
    pub labeled: Option<PathBuf>,
    /// SCR1 score file (required by uncertainty/margin/entropy).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Typicality neighbor count.
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value_t = 500)]
    pub max_clusters: usize,
    #[arg(long, default_value_t = 5)]
    pub min_cluster_size: usize,
    /// Output path for the batch JSON (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SimulateCommand {
    /// Biased-sampling difference curves and transition detection.
    Phase(PhaseArgs),
    /// Monte-Carlo mixture of two least-squares linear classifiers.
    Linear(LinearArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErrorModelKind {
    Exp,
    Power,
    Table,
}

#[derive(Args, Debug)]
pub struct PhaseArgs {
    #[arg(long, value_enum, default_value = "exp")]
    pub error: ErrorModelKind,
    /// Exponential scale.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Exponential rate.
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    /// Power-model scale.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Power-model exponent.
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// CSV file (columns m,E) for a tabulated model.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    pub p: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub m_min: f64,
    #[arg(long, default_value_t = 50.0)]
    pub m_max: f64,
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LinearArgs {
    #[arg(long, default_value_t = 0.9)]
    pub p: f64,
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 10_000)]
    pub test_size: usize,
    /// Comma-separated sample-size grid; the built-in grid when omitted.
    #[arg(long)]
    pub m_grid: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeArg {
    #[value(name = "1nn")]
    OneNn,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Tv,
    Acc,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Batch JSON produced by `select`.
    #[arg(long, conflicts_with = "record")]
    pub batch: Option<PathBuf>,
    /// Record JSONL produced by `iterate`.
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "1nn")]
    pub probe: ProbeArg,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MetricArg::Tv, MetricArg::Acc])]
    pub metric: Vec<MetricArg>,
    /// Output path for the metrics JSON (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IterateArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Select(args) => run_select(args),
        Command::Simulate(SimulateCommand::Phase(args)) => run_phase(args),
        Command::Simulate(SimulateCommand::Linear(args)) => run_linear(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Iterate(args) => run_iterate(args),
    }
}

fn write_out(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, bytes).map_err(FormatError::Io)?,
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(FormatError::Io)?,
    }
    Ok(())
}

fn read_labeled_indices(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path).map_err(FormatError::Io)?;
    let mut indices = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value = trimmed.parse::<usize>().map_err(|e| {
            CliError::Usage(format!("labeled file line {}: {e}", lineno + 1))
        })?;
        indices.push(value);
    }
    Ok(indices)
}

fn run_select(args: SelectArgs) -> Result<(), CliError> {
    let kind: StrategyKind = args.strategy.parse()?;
    let set = io::load_embeddings(&args.embeddings)?;
    // the whole pipeline runs on L2-normalized embeddings
    let set = set.l2_normalize()?;
    let labeled = match &args.labeled {
        Some(path) => read_labeled_indices(path)?,
        None => Vec::new(),
    };
    let pool = PoolState::with_labeled(set.len(), &labeled)?;
    let mut config = StrategyConfig::new(kind, args.seed);
    config.k_neighbors = args.k.max(1);
    config.max_clusters = args.max_clusters.max(1);
    config.min_cluster_size = args.min_cluster_size.max(1);

    let batch = if kind.needs_scores() {
        let scores_path = args
            .scores
            .as_ref()
            .ok_or(StrategyError::MissingScores(0))?;
        let loaded = io::read_scores(scores_path)?;
        if loaded.scores.len() != set.len() {
            return Err(FormatError::CountMismatch {
                expected: set.len(),
                found: loaded.scores.len(),
            }
            .into());
        }
        if !loaded.renormalized_rows.is_empty() {
            eprintln!(
                "warning: {} score rows renormalized to unit sum",
                loaded.renormalized_rows.len()
            );
        }
        strategies::uncertainty_family_select(&loaded.scores, &pool, args.budget, kind)?
    } else {
        strategies::select(&set, &pool, args.budget, &config)?
    };
    let mut buffer = Vec::new();
    io::write_batch_json(&mut buffer, &batch)?;
    write_out(&args.out, &buffer)
}

fn run_phase(args: PhaseArgs) -> Result<(), CliError> {
    let model = match args.error {
        ErrorModelKind::Exp => ErrorModel::exponential(args.k, args.nu)?,
        ErrorModelKind::Power => ErrorModel::power(args.c, args.q)?,
        ErrorModelKind::Table => {
            let path = args
                .table
                .as_ref()
                .ok_or_else(|| CliError::Usage("--error table requires --table PATH".into()))?;
            let text = std::fs::read_to_string(path).map_err(FormatError::Io)?;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                let mut parts = trimmed.split(',');
                let parse = |field: Option<&str>| -> Result<f64, CliError> {
                    field
                        .and_then(|f| f.trim().parse::<f64>().ok())
                        .ok_or_else(|| {
                            CliError::Usage(format!("table line {}: expected m,E", lineno + 1))
                        })
                };
                match (parse(parts.next()), parse(parts.next())) {
                    (Ok(x), Ok(y)) => {
                        xs.push(x);
                        ys.push(y);
                    }
                    _ if lineno == 0 => {} // header
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                }
            }
            ErrorModel::tabulated(xs, ys)?
        }
    };
    let cfg = MixtureConfig::new(args.p, args.alpha)?;
    if args.grid < 2 || args.m_min <= 0.0 || args.m_max <= args.m_min {
        return Err(CliError::Usage(
            "grid needs >= 2 points and 0 < m-min < m-max".into(),
        ));
    }
    let grid = theory::log_grid(args.m_min, args.m_max, args.grid);
    let curves = theory::difference_curves(&model, &cfg, args.delta, &grid)?;
    let transition = theory::detect_transition(&curves.m, &curves.favor_r1);

    let mut out = String::new();
    out.push_str(&format!(
        "# phase model={:?} p={} alpha={} delta={}\n",
        args.error, args.p, args.alpha, args.delta
    ));
    match &transition {
        Ok(report) => {
            out.push_str(&format!(
                "# z1={} z2={} single_phase={} crossings={}\n",
                report.z1,
                report.z2,
                report.single_phase,
                report
                    .crossings
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            ));
        }
        Err(TheoryError::NoCrossing) => out.push_str("# no_crossing\n"),
        Err(e) => return Err(CliError::Theory(e.clone())),
    }
    out.push_str("m,diff_r1,diff_r2\n");
    for i in 0..curves.m.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            curves.m[i], curves.favor_r1[i], curves.favor_r2[i]
        ));
    }
    std::fs::write(&args.out, out).map_err(FormatError::Io)?;
    Ok(())
}

fn run_linear(args: LinearArgs) -> Result<(), CliError> {
    let mut cfg = LinearMixtureConfig::defaults(args.seed);
    cfg.p = args.p;
    cfg.alpha = args.alpha;
    cfg.dim = args.dim;
    cfg.repetitions = args.reps;
    cfg.delta = args.delta;
    cfg.margin_r1 = args.margin;
    cfg.test_size = args.test_size;
    if let Some(grid) = &args.m_grid {
        let parsed: Result<Vec<f64>, _> = grid.split(',').map(|v| v.trim().parse::<f64>()).collect();
        cfg.m_grid = parsed.map_err(|e| CliError::Usage(format!("--m-grid: {e}")))?;
    }
    let table = crate::linear::mixture_error_experiment(&cfg)?;
    let mut out = String::new();
    out.push_str(&format!(
        "# linear dim={} p={} alpha={} delta={} margin_r2={} alpha_hat={}\n",
        cfg.dim, cfg.p, cfg.alpha, cfg.delta, table.calibration.margin_r2, table.calibration.fitted_alpha
    ));
    out.push_str("m,delta_mode,mean_error,std_error,repetitions\n");
    for cell in &table.cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            cell.m,
            cell.mode.name(),
            cell.mean_error,
            cell.std_error,
            cell.repetitions
        ));
    }
    std::fs::write(&args.out, out).map_err(FormatError::Io)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct BatchMetrics {
    strategy: String,
    batch_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    tv_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
    probe: String,
}

fn load_labeled_embeddings(
    embeddings: &Path,
    labels: &Path,
) -> Result<EmbeddingSet, CliError> {
    let set = io::load_embeddings(embeddings)?;
    let labels = io::load_labels(labels)?;
    Ok(io::attach_labels(&set, labels, None)?)
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let set = load_labeled_embeddings(&args.embeddings, &args.labels)?;
    let classes = set.class_count().ok_or(MetricsError::NoLabels)? as usize;
    let all: Vec<usize> = (0..set.len()).collect();
    let reference = metrics::class_histogram(&set, &all, classes)?;
    let probe = |labeled: &[usize], test: &[usize]| -> Result<f64, CliError> {
        Ok(match args.probe {
            ProbeArg::OneNn => metrics::one_nn_probe(&set, labeled, test)?,
            ProbeArg::Linear => metrics::linear_probe(&set, labeled, test)?,
        })
    };
    let want_tv = args.metric.contains(&MetricArg::Tv);
    let want_acc = args.metric.contains(&MetricArg::Acc);
    let probe_name = match args.probe {
        ProbeArg::OneNn => "1nn",
        ProbeArg::Linear => "linear",
    };

    let payload: Vec<u8> = if let Some(batch_path) = &args.batch {
        let batch = io::read_batch_json(batch_path)?;
        for &i in &batch.indices {
            if i >= set.len() {
                return Err(ModelError::IndexOutOfRange(i, set.len()).into());
            }
        }
        let tv = if want_tv {
            let hist = metrics::class_histogram(&set, &batch.indices, classes)?;
            Some(metrics::tv_distance(&hist, &reference)?)
        } else {
            None
        };
        let accuracy = if want_acc {
            let mask: std::collections::HashSet<usize> = batch.indices.iter().copied().collect();
            let test: Vec<usize> = (0..set.len()).filter(|i| !mask.contains(i)).collect();
            Some(probe(&batch.indices, &test)?)
        } else {
            None
        };
        let result = BatchMetrics {
            strategy: batch.strategy.clone(),
            batch_size: batch.indices.len(),
            tv_distance: tv,
            accuracy,
            probe: probe_name.to_string(),
        };
        let mut bytes = serde_json::to_vec(&result).map_err(FormatError::Json)?;
        bytes.push(b'\n');
        bytes
    } else if let Some(record_path) = &args.record {
        let record = io::read_record_jsonl(record_path)?;
        if record.header.examples != set.len() {
            return Err(FormatError::CountMismatch {
                expected: set.len(),
                found: record.header.examples,
            }
            .into());
        }
        let mut rows = Vec::new();
        let mut labeled: Vec<usize> = Vec::new();
        for iteration in &record.iterations {
            labeled.extend_from_slice(&iteration.indices);
            let tv = if want_tv {
                let hist = metrics::class_histogram(&set, &labeled, classes)?;
                Some(metrics::tv_distance(&hist, &reference)?)
            } else {
                None
            };
            let accuracy = if want_acc {
                let mask: std::collections::HashSet<usize> = labeled.iter().copied().collect();
                let test: Vec<usize> = (0..set.len()).filter(|i| !mask.contains(i)).collect();
                Some(probe(&labeled, &test)?)
            } else {
                None
            };
            rows.push(serde_json::json!({
                "iteration": iteration.iteration,
                "strategy": iteration.strategy,
                "labeled_total": labeled.len(),
                "tv_distance": tv,
                "accuracy": accuracy,
                "probe": probe_name,
            }));
        }
        let mut bytes = Vec::new();
        for row in rows {
            bytes.extend_from_slice(serde_json::to_string(&row).map_err(FormatError::Json)?.as_bytes());
            bytes.push(b'\n');
        }
        bytes
    } else {
        return Err(CliError::Usage("evaluate needs --batch or --record".into()));
    };
    write_out(&args.out, &payload)
}

/// The `iterate` experiment configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateConfig {
    pub embeddings: PathBuf,
    pub labels: PathBuf,
    pub strategies: Vec<String>,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub probes: Vec<String>,
    #[serde(default = "default_true")]
    pub tv: bool,
    #[serde(default = "default_k")]
    pub k_neighbors: usize,
    #[serde(default = "default_max_clusters")]
    pub max_clusters: usize,
    #[serde(default = "default_min_cluster")]
    pub min_cluster_size: usize,
    pub out_dir: PathBuf,
}

fn default_true() -> bool {
    true
}
fn default_k() -> usize {
    20
}
fn default_max_clusters() -> usize {
    500
}
fn default_min_cluster() -> usize {
    5
}

fn field_err(field: &str, message: &str) -> CliError {
    CliError::Usage(format!("config field `{field}`: {message}"))
}

fn run_iterate(args: IterateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(FormatError::Io)?;
    let cfg: IterateConfig = serde_json::from_str(&text).map_err(FormatError::Json)?;
    if cfg.strategies.is_empty() {
        return Err(field_err("strategies", "must list at least one strategy"));
    }
    if cfg.budgets.is_empty() {
        return Err(field_err("budgets", "must list at least one budget"));
    }
    if cfg.seeds.is_empty() {
        return Err(field_err("seeds", "must list at least one seed"));
    }
    let mut probes = Vec::new();
    for p in &cfg.probes {
        probes.push(match p.as_str() {
            "1nn" => ProbeKind::OneNn,
            "linear" => ProbeKind::Linear,
            other => return Err(field_err("probes", &format!("unknown probe {other:?}"))),
        });
    }
    let kinds: Result<Vec<StrategyKind>, _> = cfg.strategies.iter().map(|s| s.parse()).collect();
    let kinds = kinds.map_err(|e: ModelError| field_err("strategies", &e.to_string()))?;

    let set = load_labeled_embeddings(&cfg.embeddings, &cfg.labels)?.l2_normalize()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(FormatError::Io)?;

    // summary rows keyed (strategy, iteration) -> per-metric values across seeds
    let mut summary: BTreeMap<(String, u32), Vec<metrics::IterationRecord>> = BTreeMap::new();
    let mut timing_log = String::new();
    for kind in &kinds {
        let experiment = ExperimentConfig {
            strategy: {
                let mut sc = StrategyConfig::new(*kind, 0);
                sc.k_neighbors = cfg.k_neighbors;
                sc.max_clusters = cfg.max_clusters;
                sc.min_cluster_size = cfg.min_cluster_size;
                sc
            },
            budgets: cfg.budgets.clone(),
            probes: probes.clone(),
            compute_tv: cfg.tv,
        };
        for &seed in &cfg.seeds {
            let run = metrics::run_experiment(&set, &experiment, seed)?;
            let path = cfg.out_dir.join(format!("{}_seed{}.jsonl", kind.name(), seed));
            let mut buffer = Vec::new();
            io::write_record_jsonl(&mut buffer, &run.record)?;
            std::fs::write(&path, buffer).map_err(FormatError::Io)?;
            for (iteration, timing) in run.record.iterations.iter().zip(&run.timings) {
                timing_log.push_str(&format!(
                    "{} seed {} iteration {}: {:.3} ms\n",
                    kind.name(),
                    seed,
                    iteration.iteration,
                    timing.as_secs_f64() * 1e3
                ));
                summary
                    .entry((kind.name().to_string(), iteration.iteration))
                    .or_default()
                    .push(iteration.clone());
            }
        }
    }

    let mut csv = String::from(
        "strategy,iteration,seeds,labeled_mean,tv_mean,tv_stderr,acc_1nn_mean,acc_1nn_stderr,acc_linear_mean,acc_linear_stderr\n",
    );
    for ((strategy, iteration), rows) in &summary {
        let stat = |get: &dyn Fn(&metrics::IterationRecord) -> Option<f64>| -> (String, String) {
            let values: Vec<f64> = rows.iter().filter_map(|r| get(r)).collect();
            if values.is_empty() {
                return (String::new(), String::new());
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let stderr = if values.len() > 1 {
                let var =
                    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            (mean.to_string(), stderr.to_string())
        };
        let labeled_mean =
            rows.iter().map(|r| r.labeled_total as f64).sum::<f64>() / rows.len() as f64;
        let (tv_m, tv_s) = stat(&|r| r.tv_distance);
        let (nn_m, nn_s) = stat(&|r| r.one_nn_accuracy);
        let (lin_m, lin_s) = stat(&|r| r.linear_accuracy);
        csv.push_str(&format!(
            "{strategy},{iteration},{},{labeled_mean},{tv_m},{tv_s},{nn_m},{nn_s},{lin_m},{lin_s}\n",
            rows.len()
        ));
    }
    std::fs::write(cfg.out_dir.join("summary.csv"), csv).map_err(FormatError::Io)?;
    std::fs::write(cfg.out_dir.join("timings.log"), timing_log).map_err(FormatError::Io)?;
    Ok(())
}
