//! `densityflow`: simulate noisy snapshot datasets, fit particle density
//! flows to them, compare optimizers, reconstruct intermediate marginals,
//! and sweep error against sample size.
//!
//! Every run is a pure function of (config bytes, input files, seed):
//! re-running any command reproduces its output files byte for byte, at any
//! thread count. Exit codes: 0 on success, 2 for usage or configuration
//! problems, 3 when the numerics fail (divergence, non-convergence).
//! `DENSITYFLOW_LOG=info|debug` turns on progress logging (stderr).

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "densityflow", version, about = "Particle-based density-flow estimation from noisy temporal snapshots")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the configured diffusion and write a noisy snapshot dataset.
    Simulate(RunArgs),
    /// Fit per-snapshot particle clouds to a dataset (checkpointed; rerun to resume).
    Fit(RunArgs),
    /// Run both optimizers from one shared initialization; write a joint loss table.
    Compare(RunArgs),
    /// Sample reconstructed marginals at chosen times from a fit directory.
    Reconstruct(RunArgs),
    /// Sweep estimation error over per-snapshot sample sizes and fit a power law.
    RateSweep(RunArgs),
}

/// Arguments shared by every subcommand.
#[derive(Args)]
pub struct RunArgs {
    /// Experiment configuration file (strict INI-style sections).
    #[arg(long)]
    pub config: PathBuf,
    /// Input: a dataset CSV (fit/compare) or a fit directory (reconstruct).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory [default: outputs.dir from the config, else "."].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap the worker-thread count (results are unaffected).
    #[arg(long)]
    pub threads: Option<usize>,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keeps clap's convention: 0 for --help/--version, 2 otherwise.
            let _ = e.print();
            return e.exit_code();
        }
    };
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("DENSITYFLOW_LOG", "error"),
    )
    .init();

    let args = match &cli.command {
        Cmd::Simulate(a) | Cmd::Fit(a) | Cmd::Compare(a) | Cmd::Reconstruct(a) | Cmd::RateSweep(a) => a,
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialized; --threads ignored");
        }
    }

    let result = match &cli.command {
        Cmd::Simulate(a) => commands::simulate::run(a),
        Cmd::Fit(a) => commands::fit::run(a),
        Cmd::Compare(a) => commands::compare::run(a),
        Cmd::Reconstruct(a) => commands::reconstruct::run(a),
        Cmd::RateSweep(a) => commands::rate_sweep::run(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                3
            } else {
                2
            }
        }
    }
}
