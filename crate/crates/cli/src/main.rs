//! `faae`: synthesize cohorts, train normative models, evaluate them, and
//! run the focal-parameter, training-size and variant comparisons.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};

use commands::RunContext;
use config::{load_config, load_required};

#[derive(Parser)]
#[command(name = "faae", version, about = "Focal-loss adversarial autoencoder normative modeling")]
struct Cli {
    /// JSON config (or a run_manifest.json from an earlier run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel replicates and sweep cells.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort with planted affected regions.
    Synth,
    /// Split, normalize and train one model on healthy controls.
    Train,
    /// Score a held-out set with a checkpoint and write all reports.
    Eval,
    /// Focal (alpha, gamma) grid or training-size sweep.
    Sweep,
    /// Train and evaluate all six variants on one split.
    Compare,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    let ctx = RunContext {
        out: cli.out,
        seed: cli.seed,
    };
    let cfg = cli.config.as_deref();
    let required = || cfg.context("this command needs --config <path>");
    match cli.command {
        Command::Synth => commands::synth(&ctx, load_config(cfg, "synth")?),
        Command::Train => commands::train_cmd(&ctx, load_required(required()?, "train")?),
        Command::Eval => commands::eval_cmd(&ctx, load_required(required()?, "eval")?),
        Command::Sweep => commands::sweep_cmd(&ctx, load_required(required()?, "sweep")?),
        Command::Compare => commands::compare_cmd(&ctx, load_required(required()?, "compare")?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
