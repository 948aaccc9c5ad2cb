//! `m2no` command-line front end.
//!
//! Every subcommand writes into the output directory (`--output-dir`, else
//! `$M2NO_OUTPUT_DIR`, else the working directory) and reports failures as a
//! single `error kind=... message="..."` line on stderr with exit code 2
//! (configuration), 3 (numerical) or 4 (I/O).

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "m2no", version, about = "Multiwavelet multigrid toolkit")]
struct Cli {
    /// Directory receiving all outputs.
    #[arg(long, global = true, env = "M2NO_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the order-k filter bank as CSV.
    Filters {
        #[arg(long)]
        k: usize,
    },
    /// Multiwavelet decomposition of a field file, or reconstruction with --inverse.
    Transform(TransformArgs),
    /// Classical wavelet multigrid solve of a seeded Poisson problem.
    Solve(SolveArgs),
    /// Preconditioned GMRES on the Poisson operator.
    Gmres(GmresArgs),
    /// Generate a seeded dataset with a manifest.
    Dataset(DatasetArgs),
    /// Train a model from a TOML configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a checkpoint on a dataset manifest.
    Eval(EvalArgs),
    /// Radial error spectrum of predictions against targets.
    Spectrum {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    #[arg(long)]
    pub inverse: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value = "jacobi")]
    pub smoother: String,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 2)]
    pub pre: usize,
    #[arg(long, default_value_t = 2)]
    pub post: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_cycles: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GmresArgs {
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// identity, gs, schwarz, wavelet_mg or learned.
    #[arg(long, default_value = "identity")]
    pub precond: String,
    #[arg(long, default_value_t = 1e-11)]
    pub tol: f64,
    #[arg(long)]
    pub restart: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Checkpoint for `--precond learned`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long, default_value = "poisson_rhs")]
    pub kind: String,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset manifest CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub superres_factor: Option<usize>,
}

fn run(cli: Cli) -> CliResult<()> {
    let out = commands::Output::create(cli.output_dir.unwrap_or_else(|| PathBuf::from(".")))?;
    match cli.command {
        Command::Filters { k } => commands::filters(&out, k),
        Command::Transform(a) => commands::transform(&out, &a),
        Command::Solve(a) => commands::solve(&out, &a),
        Command::Gmres(a) => commands::gmres(&out, &a),
        Command::Dataset(a) => commands::dataset(&out, &a),
        Command::Train { config } => commands::train(&out, &config),
        Command::Eval(a) => commands::eval(&out, &a),
        Command::Spectrum { pred, target } => commands::spectrum(&out, &pred, &target),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::config(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
