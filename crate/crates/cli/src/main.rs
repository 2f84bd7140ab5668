//! Command-line driver: generate instances, run the solver, verify the
//! invariant suite, and sweep condition numbers.
//!
//! Exit codes: 0 on success, 1 when a verification or run fails, 2 for
//! usage and IO errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "coupled-decent",
    version,
    about = "Decentralized solver for sum-coupled convex problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the config's random seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Override the config's output path.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a problem instance file and print its spectral summary.
    Generate,
    /// Run the solver and write a convergence trace CSV.
    Solve,
    /// Run the invariant self-check suite and print a pass/fail table.
    Verify,
    /// Sweep a condition number and record complexity counters.
    Bench,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    init_thread_pool()?;
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Generate => commands::cmd_generate(&config, out, cli.quiet),
        Command::Solve => commands::cmd_solve(&config, out, cli.quiet),
        Command::Verify => commands::cmd_verify(&config, out, cli.quiet),
        Command::Bench => commands::cmd_bench(&config, out, cli.quiet),
    }
}

/// Cap worker parallelism from `COUPLED_DECENT_THREADS`; 0 or unset
/// leaves the automatic thread count in place.
fn init_thread_pool() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("COUPLED_DECENT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("COUPLED_DECENT_THREADS must be a nonnegative integer, got {raw:?}"))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    Ok(())
}
