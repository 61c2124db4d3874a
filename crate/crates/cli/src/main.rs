//! `spiked`: generate spiked random matrices, compute their spectra, run the
//! box-constrained recovery, and drive reproducible Monte-Carlo sweeps.
//!
//! Exit codes: 0 success; 2 usage or invalid parameters; 3 I/O failure;
//! 4 malformed or inconsistent input data; 5 numerical failure.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Master-seed environment fallback, used when `--seed` is absent.
pub const SEED_ENV: &str = "SPIKED_SEED";

#[derive(Parser)]
#[command(
    name = "spiked",
    version,
    about = "Spiked random matrix simulation: spectra, recovery, and Monte-Carlo sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a spiked observation matrix and its planted signal vector.
    Gen(GenArgs),
    /// Compute the leading eigenpair (and optionally the full spectrum) of a
    /// stored matrix.
    Eig(EigArgs),
    /// Run the box-constrained gradient-descent recovery on a stored matrix.
    Recover(RecoverArgs),
    /// Run a Monte-Carlo sweep and write per-trial and summary CSV files.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, serde::Serialize)]
pub struct GenArgs {
    /// Matrix dimension.
    #[arg(long)]
    pub n: usize,
    /// Spike strength.
    #[arg(long, default_value_t = 4.0)]
    pub lambda: f64,
    /// Box bound recorded with the signal.
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    /// Fraction of entries carrying the block signal.
    #[arg(long, default_value_t = 0.02)]
    pub block_fraction: f64,
    /// Master seed; falls back to SPIKED_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Also write CSV mirrors of the matrix and vector.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct EigArgs {
    /// Matrix file (binary format).
    #[arg(long)]
    pub input: std::path::PathBuf,
    /// Residual tolerance relative to the Frobenius norm.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Iteration budget for the leading-eigenpair solver.
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Also compute the full spectrum and write spectrum.csv.
    #[arg(long)]
    pub full: bool,
    /// Dimension cap for the full-spectrum solver.
    #[arg(long, default_value_t = spiked::eig::DEFAULT_SPECTRUM_CAP)]
    pub cap: usize,
    /// Master seed for the solver start vector.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct RecoverArgs {
    /// Matrix file (binary format); must be exactly symmetric.
    #[arg(long)]
    pub input: std::path::PathBuf,
    /// Optional true signal vector for error reporting.
    #[arg(long)]
    pub true_vector: Option<std::path::PathBuf>,
    /// Optional key=value config file; flags override its values.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Step size.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Regularization weight.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Relative-change termination threshold.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Box bound.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Penalty form: 'gradient' (2*gamma*x, default) or 'printed'
    /// (gamma*(x^T x)*1, the all-ones form).
    #[arg(long)]
    pub penalty_variant: Option<String>,
    /// Master seed for the initial iterate.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Wigner,
    Covariance,
    Table1,
    Esd,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct SweepArgs {
    /// Which harness to run.
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Spike strengths for the wigner sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![4.0])]
    pub lambdas: Vec<f64>,
    /// Dimensions for the wigner and table1 sweeps.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Population spikes for the covariance sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![3.0])]
    pub lambda1s: Vec<f64>,
    /// Feature dimension for the covariance sweep.
    #[arg(long, default_value_t = 500)]
    pub p: usize,
    /// Sample count for the covariance sweep.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Matrix dimension for the esd sweep.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Trials per grid point.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Master seed; falls back to SPIKED_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write JSON mirrors of the CSV outputs.
    #[arg(long)]
    pub json: bool,
    /// Step size for table1 recovery.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Regularization weight for table1 recovery.
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Termination threshold for table1 recovery.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Iteration cap for table1 recovery.
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Box bound for table1 recovery.
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    /// Penalty form for table1 recovery: 'gradient' or 'printed'.
    #[arg(long, default_value = "gradient")]
    pub penalty_variant: String,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: std::path::PathBuf,
}

/// Flag beats environment beats the zero default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got '{text}'")),
        Err(_) => Ok(0),
    }
}

fn exit_code_for(err: &commands::CliError) -> u8 {
    use commands::CliError::*;
    match err {
        Usage(_) => 2,
        Io(_) => 3,
        Core(e) => match e {
            spiked::Error::InvalidParameter(_) => 2,
            spiked::Error::Io(_) => 3,
            spiked::Error::InvalidFormat(_)
            | spiked::Error::Asymmetric(_)
            | spiked::Error::DimensionMismatch(_, _) => 4,
            _ => 5,
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => commands::cmd_gen(args),
        Command::Eig(args) => commands::cmd_eig(args),
        Command::Recover(args) => commands::cmd_recover(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
