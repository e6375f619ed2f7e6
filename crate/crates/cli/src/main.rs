//! `moralnet`: elicit association corpora, build and propagate moral
//! networks, and evaluate and analyze them. Each subcommand reads and writes
//! plain files so human and model data go through the same steps.

mod analyze;
mod build;
mod elicit;
mod evaluate;
mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "moralnet", version, about = "Moral value propagation over word-association graphs")]
struct Cli {
    /// Seed for every random choice; recorded in each manifest.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect word associations from a chat-completion endpoint.
    Elicit(elicit::ElicitArgs),
    /// Elicit at several temperatures and pick the most human-like one.
    Sweep(elicit::SweepArgs),
    /// Build the association graph and propagate moral seeds over it.
    Build(build::BuildArgs),
    /// Correlate propagated scores with a gold lexicon and score response
    /// overlap (precision@k).
    Evaluate(evaluate::EvaluateArgs),
    /// Rankings, divergence, response lexicon statistics and subgraphs.
    Analyze(analyze::AnalyzeArgs),
}

/// Failure classes mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid(message: impl Into<String>) -> CliError {
    CliError::Validation(message.into())
}

/// Fails validation unless `path` is an existing file.
pub fn require_file(flag: &str, path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("{flag}: no such file '{}'", path.display())))
    }
}

pub fn require_opt_file(flag: &str, path: Option<&Path>) -> CliResult<()> {
    path.map_or(Ok(()), |p| require_file(flag, p))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Elicit(a) => elicit::run_elicit(a, cli.seed),
        Command::Sweep(a) => elicit::run_sweep(a, cli.seed),
        Command::Build(a) => build::run(a, cli.seed),
        Command::Evaluate(a) => evaluate::run(a, cli.seed),
        Command::Analyze(a) => analyze::run(a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
