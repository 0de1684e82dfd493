//! `pairpref` command-line tools.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or arguments,
//! 3 fit did not converge or training diverged, 4 vote graph disconnected or
//! a sample without wins.

use std::fmt;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pairpref_core::bt::io::{format_scores, format_vote_matrix, parse_gammas, parse_vote_matrix};
use pairpref_core::bt::{mm_fit, simulate_votes, FitConfig, Normalization};
use pairpref_core::learner::{
    evaluate, history_csv, split_dataset, train, Architecture, Dataset, ScorerModel, TrainConfig,
};
use pairpref_core::Error;
use pairpref_survey::{Durability, ServiceConfig, ServiceError, SurveyStore};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const EXIT_IO: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_DISCONNECTED: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => EXIT_IO,
            Error::Disconnected { .. } | Error::ZeroWins { .. } => EXIT_DISCONNECTED,
            Error::Diverged { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_INVALID,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Core(e) => e.into(),
            ServiceError::Io(_) | ServiceError::Corrupt(_) => Self { code: EXIT_IO, message: e.to_string() },
            _ => Self::invalid(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError { code: EXIT_IO, message: format!("{}: {e}", parent.display()) })?;
    }
    fs::write(path, contents)
        .map_err(|e| CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) })
}

/// Prefixes core errors with the file they came from.
fn in_file<T>(path: &Path, r: Result<T, Error>) -> CliResult<T> {
    r.map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "pairpref",
    version,
    about = "Pairwise preference surveys, Bradley-Terry fitting and learned scorers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit Bradley-Terry strengths to a vote-matrix file.
    Fit(FitArgs),
    /// Sample a vote matrix from ground-truth strengths.
    Simulate(SimulateArgs),
    /// Train a scorer on a feature dataset.
    Train(TrainArgs),
    /// Evaluate a scorer checkpoint against survey strengths.
    Evaluate(EvaluateArgs),
    /// Run the survey HTTP service.
    Serve(ServeArgs),
    /// Write matrices, logs and fitted scores for a stored survey.
    ExportReport(ExportReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    /// Last sample has strength 1.
    Reference,
    None,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Reference => Normalization::ReferenceSample,
            NormalizationArg::None => Normalization::None,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Vote-matrix file.
    pub matrix: PathBuf,
    /// Score file to write [default: MATRIX with a .scores extension].
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Stop when no strength changes by more than this.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Reference)]
    pub normalization: NormalizationArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Ground-truth strengths: one per line, or a score file.
    #[arg(long)]
    pub gammas: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub votes_per_pair: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Matrix file to write [default: standard output].
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Split options shared by `train` and `evaluate`.
#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Seed for the group split and the epoch shuffle.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train, validation and test fractions of groups.
    #[arg(long, default_value = "0.6,0.2,0.2", value_parser = parse_split)]
    pub split: (f64, f64, f64),
}

fn parse_split(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected three comma-separated fractions, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset CSV: group,item,gamma,f0,f1,...
    #[arg(long)]
    pub dataset: PathBuf,
    /// `linear` or `mlp:H` for one ReLU hidden layer of width H.
    #[arg(long, default_value = "linear")]
    pub arch: Architecture,
    /// Start from this checkpoint instead of a fresh model.
    #[arg(long, conflicts_with = "arch")]
    pub init: Option<PathBuf>,
    /// Seed for the initial weights.
    #[arg(long, default_value_t = 0)]
    pub init_seed: u64,
    /// Layer index to keep fixed (repeatable).
    #[arg(long)]
    pub freeze: Vec<usize>,
    #[arg(long, default_value_t = 5e-5)]
    pub lr: f64,
    /// Learning-rate factor applied after each epoch.
    #[arg(long, default_value_t = 0.95)]
    pub decay: f64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, default_value = "model.ckpt")]
    pub checkpoint: PathBuf,
    /// Per-epoch history CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Test-split report CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subset {
    All,
    Train,
    Validation,
    Test,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Model checkpoint [default: an all-zero linear model].
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Which groups to evaluate; splits use --seed and --split as in training.
    #[arg(long, value_enum, default_value_t = Subset::All)]
    pub subset: Subset,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Report CSV to write [default: standard output].
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DurabilityArg {
    /// fsync every vote before acknowledging it.
    Sync,
    /// Hand every vote to the OS before acknowledging it.
    Flush,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PAIRPREF_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, env = "PAIRPREF_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    /// Schedule seed for surveys whose spec sets none.
    #[arg(long, env = "PAIRPREF_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DurabilityArg::Sync)]
    pub durability: DurabilityArg,
}

#[derive(Debug, Args)]
pub struct ExportReportArgs {
    #[arg(long, env = "PAIRPREF_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub survey: String,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Serve(a) => cmd_serve(a),
        Command::ExportReport(a) => cmd_export_report(&a),
    }
}

pub fn cmd_fit(args: &FitArgs) -> CliResult {
    let votes = in_file(&args.matrix, parse_vote_matrix(&read(&args.matrix)?))?;
    let config = FitConfig {
        tolerance: args.tolerance,
        max_iterations: args.max_iterations,
        normalization: args.normalization.into(),
    };
    let fit = in_file(&args.matrix, mm_fit(&votes, &config))?;
    let out = args.output.clone().unwrap_or_else(|| args.matrix.with_extension("scores"));
    write(&out, format_scores(&fit.scores))?;
    println!(
        "{} after {} iterations: final delta {:e}, log-likelihood {:.6}",
        if fit.converged { "converged" } else { "did not converge" },
        fit.iterations,
        fit.final_delta,
        fit.log_likelihood
    );
    let order: Vec<String> = fit.scores.order().iter().map(usize::to_string).collect();
    println!("order (strongest first): {}", order.join(" "));
    println!("scores written to {}", out.display());
    if fit.converged {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_NOT_CONVERGED,
            message: format!("no convergence within {} iterations", args.max_iterations),
        })
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult {
    let gammas = in_file(&args.gammas, parse_gammas(&read(&args.gammas)?))?;
    if args.votes_per_pair == 0 {
        return Err(CliError::invalid("--votes-per-pair must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let votes = simulate_votes(&gammas, args.votes_per_pair, &mut rng)?;
    let text = format_vote_matrix(&votes);
    match &args.output {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let file = fs::File::open(path)
        .map_err(|e| CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) })?;
    in_file(path, Dataset::read_csv(file))
}

fn train_config(args: &TrainArgs) -> TrainConfig {
    TrainConfig {
        learning_rate: args.lr,
        decay: args.decay,
        epochs: args.epochs,
        seed: args.split.seed,
        split_ratios: args.split.split,
    }
}

pub fn cmd_train(args: &TrainArgs) -> CliResult {
    let data = load_dataset(&args.dataset)?;
    let mut model = match &args.init {
        Some(path) => in_file(path, ScorerModel::from_checkpoint(&read(path)?))?,
        None => ScorerModel::random(args.arch, data.dim, args.init_seed)?,
    };
    for &layer in &args.freeze {
        model.set_frozen(layer, true)?;
    }
    let outcome = train(model, &data.groups, &train_config(args))?;
    write(&args.checkpoint, outcome.model.to_checkpoint())?;
    if let Some(path) = &args.history {
        write(path, history_csv(&outcome.history))?;
    }
    if let Some(last) = outcome.history.last() {
        println!(
            "epoch {}: train loss {:.6}, validation accuracy {:.4}",
            last.epoch, last.train_loss, last.val_accuracy
        );
    }
    let report = evaluate(&outcome.model, &outcome.split.test)?;
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    println!(
        "test: accuracy {:.4}, pcc {}, srcc {}, mean relative error {:.4}",
        report.aggregate.accuracy,
        fmt(report.aggregate.pcc),
        fmt(report.aggregate.srcc),
        report.aggregate.mean_relative_error
    );
    if let Some(path) = &args.report {
        write(path, report.to_csv())?;
    }
    println!("checkpoint written to {}", args.checkpoint.display());
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult {
    let data = load_dataset(&args.dataset)?;
    let model = match &args.checkpoint {
        Some(path) => in_file(path, ScorerModel::from_checkpoint(&read(path)?))?,
        None => ScorerModel::zeros(Architecture::Linear, data.dim)?,
    };
    let groups = match args.subset {
        Subset::All => data.groups,
        subset => {
            let cfg = TrainConfig {
                seed: args.split.seed,
                split_ratios: args.split.split,
                ..TrainConfig::default()
            };
            let split = split_dataset(&data.groups, &cfg)?;
            match subset {
                Subset::Train => split.train,
                Subset::Validation => split.validation,
                _ => split.test,
            }
        }
    };
    let report = evaluate(&model, &groups)?;
    match &args.output {
        Some(path) => {
            write(path, report.to_csv())?;
            let a = &report.aggregate;
            println!(
                "{} groups: accuracy {:.4}, mean relative error {:.4}",
                a.groups, a.accuracy, a.mean_relative_error
            );
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

pub fn cmd_serve(args: ServeArgs) -> CliResult {
    let config = ServiceConfig {
        listen: args.listen,
        data_dir: args.data_dir,
        seed: args.seed,
        durability: match args.durability {
            DurabilityArg::Sync => Durability::Sync,
            DurabilityArg::Flush => Durability::Flush,
        },
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })?;
    Ok(runtime.block_on(pairpref_survey::serve(config))?)
}

/// Writes `survey.tar`, `events.log`, `matrices/{group}.txt`,
/// `scores/{group}.scores` for groups that can be fitted, and `summary.csv`.
pub fn cmd_export_report(args: &ExportReportArgs) -> CliResult {
    if !args.data_dir.is_dir() {
        return Err(CliError {
            code: EXIT_IO,
            message: format!("{}: no such data directory", args.data_dir.display()),
        });
    }
    let store = SurveyStore::open(&args.data_dir, 0, Durability::Sync)?;
    let out = &args.output;
    write(&out.join("survey.tar"), store.export_survey(&args.survey)?)?;
    write(&out.join("events.log"), store.event_log(&args.survey)?)?;
    let mut summary = String::from("group,items,total_votes,status,iterations,converged\n");
    for (group, matrix) in store.matrices(&args.survey)? {
        write(&out.join("matrices").join(format!("{group}.txt")), format_vote_matrix(&matrix))?;
        let r = store.group_results(&args.survey, &group)?;
        let status = match r.status {
            pairpref_survey::ResultStatus::Ok => "ok",
            pairpref_survey::ResultStatus::InsufficientComparisons => "insufficient_comparisons",
        };
        if let Some(g) = r.gammas {
            let scores = pairpref_core::bt::ScoreVector::from_gammas(g)?;
            write(&out.join("scores").join(format!("{group}.scores")), format_scores(&scores))?;
        }
        let (iters, conv) = r
            .fit
            .map_or((String::new(), String::new()), |f| (f.iterations.to_string(), f.converged.to_string()));
        summary.push_str(&format!("{group},{},{},{status},{iters},{conv}\n", r.items.len(), r.total_votes));
    }
    write(&out.join("summary.csv"), summary)?;
    println!("report for survey {} written to {}", args.survey, out.display());
    Ok(())
}
