//! Command-line front end for the `mmsbm` crate: sample graphs from a
//! configured model, run the estimation pipeline on edge lists, and sweep
//! estimation error over a grid of node counts.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use mmsbm::error::{Error, Result};
use mmsbm::ShrinkPolicy64;

pub mod commands;
pub mod config;
pub mod sweep;

/// Mixed-membership blockmodel simulation and estimation.
#[derive(Debug, Parser)]
#[command(name = "mmsbm", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Top-level subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a graph from the configured model and write it as an edge list.
    Simulate(SimulateArgs),
    /// Estimate model parameters from an edge-list file.
    Estimate(EstimateArgs),
    /// Replicate estimation over a grid of node counts and write a CSV.
    Sweep(SweepArgs),
}

/// Arguments of `mmsbm simulate`.
#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Node count; defaults to the first entry of the config's grid.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed override; defaults to the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Edge-list output path; defaults to the config's "out".
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for ground-truth CSVs (b, alpha, memberships, positions).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

/// Arguments of `mmsbm estimate`.
#[derive(Debug, clap::Args)]
pub struct EstimateArgs {
    /// Edge-list file to estimate from.
    pub graph: PathBuf,
    /// Number of polytope vertices (communities).
    #[arg(long)]
    pub k: usize,
    /// Embedding dimension; defaults to k.
    #[arg(long)]
    pub d: Option<usize>,
    /// Shrink policy: none, fixed:<eta>, or rate:<a>.
    #[arg(long, default_value = "none")]
    pub policy: ShrinkPolicy64,
    /// Result JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Arguments of `mmsbm sweep`.
#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Base seed override; defaults to the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path; defaults to the config's "out".
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Estimate(args) => commands::cmd_estimate(args),
        Command::Sweep(args) => {
            let mut config = config::ExperimentConfig::load(&args.config)?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            let out = args
                .out
                .clone()
                .or_else(|| config.out.as_ref().map(Into::into))
                .ok_or_else(|| {
                    Error::InvalidParameter(
                        "no output path: pass --out or set \"out\" in the config".to_string(),
                    )
                })?;
            sweep::cmd_sweep(&config, args.jobs, &out)
        }
    }
}
