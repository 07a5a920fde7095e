//! `kaonlab` command-line driver.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kaonlab_core::exec::with_workers;
use kaonlab_core::pipeline::{cmd_evolve, cmd_experiment, cmd_spreading, cmd_trajectories, RunConfig};
use kaonlab_core::Execution;

#[derive(Parser)]
#[command(name = "kaonlab", version, about = "Wavefunction, trajectory and neutral-kaon decay simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crank-Nicolson evolution of a Gaussian packet; writes wavefunction snapshots.
    Evolve(RunArgs),
    /// Bohmian trajectories and the equivariance check.
    Trajectories(RunArgs),
    /// Kaon decay Monte Carlo, vertex reconstruction and the contamination report.
    Experiment(RunArgs),
    /// Wave-packet spreading error budget over flight distances.
    Spreading(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, or JSON if the name ends in .json.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides run.seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides run.output_dir (default: ./out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides run.workers. Results do not depend on it.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Evolve(a) | Command::Trajectories(a) | Command::Experiment(a) | Command::Spreading(a) => a,
    };
    let config = RunConfig::load(&args.config)?.resolve(args.seed)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.run.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let workers = args.workers.or(config.run.workers);
    let exec = Execution::default();

    let files = with_workers(workers, || match cli.command {
        Command::Evolve(_) => cmd_evolve(&config, &out),
        Command::Trajectories(_) => cmd_trajectories(&config, &out, exec),
        Command::Experiment(_) => cmd_experiment(&config, &out, exec),
        Command::Spreading(_) => cmd_spreading(&config, &out, exec),
    })
    .with_context(|| format!("run with config {} failed", args.config.display()))?;

    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}
