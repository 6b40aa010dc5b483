//! Experiment driver for the hypervisc solver.
//!
//! Subcommands integrate configured runs, ladder the operator perturbation
//! strength against its zero-strength reference, study perturbed-data
//! stability, verify the randomized estimate reports, and re-derive stored
//! reports from artifacts. Seeded invocations with `--deterministic` produce
//! byte-identical output files.

mod artifacts;
mod config;
mod diagnose;
mod fields;
mod run;
mod stability;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "hypervisc",
    version,
    about = "Pseudo-spectral runs, perturbation sweeps, and estimate checks for hyper-viscous incompressible flow"
)]
struct Cli {
    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for reports, ledgers, and snapshots
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker thread count (default: one per logical CPU)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Single-threaded, seeded execution with byte-stable output files
    #[arg(long, global = true)]
    deterministic: bool,

    /// Override every seed in the configuration
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configured run; write its ledger and snapshots
    Run,
    /// Ladder the operator perturbation strength against the zero-strength reference
    SweepEps,
    /// Compare perturbed-data runs against a base run and fit the difference envelope
    Stability,
    /// Randomized ratio reports and inequality checks for the estimate layer
    Verify {
        /// Fault injection: distort one norm weight to prove the canary trips
        #[arg(long, hide = true)]
        corrupt_norm_weights: bool,
    },
    /// Re-derive reports from a run or sweep directory and cross-check them
    Diagnose {
        /// Directory holding run_config.json or sweep_manifest.json
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    match try_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn try_main() -> Result<()> {
    let cli = Cli::parse();

    let threads = cli.threads.or(if cli.deterministic { Some(1) } else { None });
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }

    match &cli.command {
        Command::Run => run::execute(&load_config(&cli)?, &out_dir(&cli)?, cli.seed),
        Command::SweepEps => sweep::execute(&load_config(&cli)?, &out_dir(&cli)?, cli.seed),
        Command::Stability => stability::execute(&load_config(&cli)?, &out_dir(&cli)?, cli.seed),
        Command::Verify {
            corrupt_norm_weights,
        } => verify::execute(
            &load_config(&cli)?,
            &out_dir(&cli)?,
            cli.seed,
            *corrupt_norm_weights,
        ),
        Command::Diagnose { dir } => diagnose::execute(dir, cli.out.as_deref()),
    }
}

fn load_config(cli: &Cli) -> Result<ConfigFile> {
    let path = cli
        .config
        .as_ref()
        .context("--config PATH is required for this subcommand")?;
    ConfigFile::load(path)
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    cli.out
        .clone()
        .context("--out DIR is required for this subcommand")
}
