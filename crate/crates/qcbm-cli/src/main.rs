//! Command-line front end. Each subcommand fixes the run mode; the rest
//! of the run is described by a JSON config file (every key optional).
//!
//!   qcbm simulate --config run.json
//!   qcbm train --config run.json --seed 7 --out results/train7
//!   qcbm mitigate-bench --config bench.json
//!   qcbm permanent-bench --size 4 --reps 20
//!
//! `--seed` and `--out` override the config in place. Exit status is
//! nonzero on any rejected config or failed run.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qcbm_cli::config::{names_mode, parse_config, RunConfig, RunMode};
use qcbm_cli::runner::{self, PermBenchOptions};

#[derive(Parser)]
#[command(
    name = "qcbm",
    about = "Photonic circuit Born machine simulator and training harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; omit to run with built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master RNG seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one fixed circuit under loss and reconstruct its output.
    Simulate(CommonArgs),
    /// Train the circuit against a target, one arm per estimator.
    Train(CommonArgs),
    /// Score mitigated against post-selected estimates on random circuits.
    MitigateBench(CommonArgs),
    /// Compare permanent estimators at matched work budgets.
    PermanentBench {
        #[command(flatten)]
        common: CommonArgs,
        /// JSON matrix file (nested rows of [re, im] pairs).
        #[arg(long, conflicts_with_all = ["size", "matrix_seed"])]
        matrix_file: Option<PathBuf>,
        /// Side length of the random test matrix.
        #[arg(long, default_value_t = 4)]
        size: usize,
        /// Seed for the random test matrix (default: derived from --seed).
        #[arg(long)]
        matrix_seed: Option<u64>,
        /// Additive error the default budget grid is sized for.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Failure probability for the concentration bounds.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Explicit work budgets, comma separated (overrides the grid).
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<u64>>,
        /// Repetitions per estimator and budget.
        #[arg(long, default_value_t = 8)]
        reps: u64,
        /// Write the result table here instead of into the output dir.
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
}

fn load_config(common: &CommonArgs, mode: RunMode) -> Result<RunConfig> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => "{}".to_string(),
    };
    let mut cfg = parse_config(&text)?;
    if names_mode(&text) && cfg.mode != mode {
        bail!(
            "config says mode \"{}\" but the command line says \"{}\"; drop the config's mode key or switch subcommands",
            cfg.mode,
            mode
        );
    }
    cfg.mode = mode;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = load_config(&common, RunMode::Simulate)?;
            runner::run(&cfg)?;
        }
        Command::Train(common) => {
            let cfg = load_config(&common, RunMode::Train)?;
            runner::run(&cfg)?;
        }
        Command::MitigateBench(common) => {
            let cfg = load_config(&common, RunMode::MitigateBench)?;
            runner::run(&cfg)?;
        }
        Command::PermanentBench {
            common,
            matrix_file,
            size,
            matrix_seed,
            epsilon,
            delta,
            budgets,
            reps,
            out_csv,
        } => {
            let cfg = load_config(&common, RunMode::PermanentBench)?;
            let opts = PermBenchOptions {
                matrix_file,
                size,
                matrix_seed,
                epsilon,
                delta,
                budgets,
                reps,
                out_csv,
            };
            runner::run_with_options(&cfg, &opts)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
