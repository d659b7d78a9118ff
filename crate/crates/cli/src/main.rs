//! `schmidt`: classify, scan, lift, lower and verify Schmidt-number witnesses.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schmidt_core::OptimizerConfig;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "schmidt", version, about = "Schmidt-number witnesses via ancilla embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an operator as positive, not a witness, or a k-Schmidt witness.
    Classify(ClassifyArgs),
    /// Classify the isotropic family over a parameter grid.
    Scan(ScanArgs),
    /// Lift a state or operator into the ancilla-extended space.
    Lift(LiftArgs),
    /// Lower an extended-space state back to the original space.
    Lower(LowerArgs),
    /// Run a seeded identity or oracle suite.
    Verify(VerifyArgs),
    /// Product-state floor of the isotropic family and its zero crossing.
    ProductFloor(FloorArgs),
}

#[derive(Args, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimizerArgs {
    /// Seed for all randomized steps.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// See-saw restarts per minimization.
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    /// Positivity tolerance.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
}

impl OptimizerArgs {
    pub fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            seed: self.seed,
            restarts: self.restarts,
            max_iters: self.max_iters,
            positivity_tol: self.tol,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Isotropic,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassifyArgs {
    /// Operator JSON file.
    #[arg(long, conflicts_with = "family")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Highest lifting level to try; defaults to min(dA, dB).
    #[arg(long)]
    pub max_k: Option<usize>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Report destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanArgs {
    #[arg(long, value_enum, default_value_t = Family::Isotropic)]
    pub family: Family,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long)]
    pub a_from: f64,
    #[arg(long)]
    pub a_to: f64,
    #[arg(long)]
    pub steps: usize,
    /// Levels whose product minima are recorded on every row.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
    pub levels: Vec<usize>,
    #[arg(long)]
    pub max_k: Option<usize>,
    /// Bisect each verdict change down to this width.
    #[arg(long)]
    pub bisect: Option<f64>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// CSV (or report, with `--format json`) destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Additional JSON report destination.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LiftArgs {
    /// State or operator JSON file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Destination of the lifted object.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LowerArgs {
    /// Extended-space state JSON file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Destination of the lowered state.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyArgs {
    /// identities, roundtrip, trace, lemma5 or oracle.
    #[arg(long)]
    pub suite: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Dimensions for the oracle suite, e.g. 2x3.
    #[arg(long)]
    pub dims: Option<String>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FloorArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.0)]
    pub a_from: f64,
    #[arg(long, default_value_t = 0.95)]
    pub a_to: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Width to which the zero crossing is bisected.
    #[arg(long, default_value_t = 1e-7)]
    pub bisect: f64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const INPUT: u8 = 2;
    pub const NUMERICAL: u8 = 3;

    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: Self::INPUT, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { code: Self::NUMERICAL, message: message.into() }
    }
}

impl From<schmidt_core::Error> for CliError {
    fn from(e: schmidt_core::Error) -> Self {
        match e {
            schmidt_core::Error::Numerical(_) => CliError::numerical(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Classify(args) => commands::classify(&args),
        Command::Scan(args) => commands::scan(&args),
        Command::Lift(args) => commands::lift(&args),
        Command::Lower(args) => commands::lower(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::ProductFloor(args) => commands::product_floor(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
