//! `qutrit`: generate, label and learn two-qutrit entanglement datasets.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use qutrit_learn::{LearnError, Task};

#[derive(Parser, Debug)]
#[command(name = "qutrit", version, about = "Two-qutrit entanglement datasets and classifiers")]
struct Cli {
    /// Defaults as `key = value` lines, keys named like the long flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads; changes wall time only.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Log verbosity on standard error (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a balanced labeled dataset.
    Generate(GenerateArgs),
    /// Summarize a dataset manifest.
    Stats(InArgs),
    /// Write the feature table of a dataset.
    Featurize(FeaturizeArgs),
    /// Stratified train/test split.
    Split(SplitArgs),
    /// Search for and fit a pipeline.
    Train(TrainArgs),
    /// Score a model on a held-out table.
    Evaluate(EvaluateArgs),
    /// Predict labels or robustness for states.
    Predict(PredictArgs),
    /// Entanglement verdict from the predicted robustness.
    Verdict(VerdictArgs),
    /// Generalized robustness of one state.
    Gr(GrArgs),
    /// Recheck every row of a dataset.
    Verify(InArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    per_class: usize,
    #[arg(long, default_value_t = 0.5)]
    artificial_fraction: f64,
    #[arg(long, default_value_t = qutrit_core::witness::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Random-stream draw budget.
    #[arg(long)]
    max_draws: Option<u64>,
    /// NPT draws spent on artificial PPTES.
    #[arg(long)]
    max_artificial_attempts: Option<u64>,
}

#[derive(Args, Debug)]
struct InArgs {
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct FeaturizeArgs {
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Add squared and pairwise-product features (3400 columns).
    #[arg(long)]
    expand: bool,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    train: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    task: Task,
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// TOML search space replacing the built-in one.
    #[arg(long, value_name = "FILE")]
    search_space: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Write the report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Binary state file, one or more records.
    #[arg(long, conflicts_with = "csv", required_unless_present = "csv")]
    state: Option<PathBuf>,
    /// CSV with columns c_1..c_80.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerdictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    state: PathBuf,
    /// Error scale of the regressor; defaults to its cross-validated MAE.
    #[arg(long)]
    mae: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    EpsOew,
    Decomposable,
}

#[derive(Args, Debug)]
struct GrArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::EpsOew)]
    method: Method,
    #[arg(long, default_value_t = qutrit_core::witness::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    edge_out: Option<PathBuf>,
    #[arg(long)]
    sigma_out: Option<PathBuf>,
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

/// A computation that ran but did not produce a usable result.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct NumericalFailure(String);

fn exit_code(e: &anyhow::Error) -> u8 {
    fn core(e: &qutrit_core::Error) -> u8 {
        match e {
            qutrit_core::Error::Numerical(_) | qutrit_core::Error::NoConvergence(_) => 2,
            _ => 1,
        }
    }
    for cause in e.chain() {
        if cause.is::<NumericalFailure>() {
            return 2;
        }
        if let Some(c) = cause.downcast_ref::<qutrit_core::Error>() {
            return core(c);
        }
        if let Some(l) = cause.downcast_ref::<LearnError>() {
            return match l {
                LearnError::Numerical(_) | LearnError::SearchFailed(_) => 2,
                LearnError::Core(c) => core(c),
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let resolved = match config::resolve(&argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let matches = match Cli::command().try_get_matches_from(&resolved) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cli = Cli::from_arg_matches(&matches).expect("matches come from the same command");
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let snapshot = config::snapshot(&matches);
    match commands::run(cli.command, &snapshot) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
