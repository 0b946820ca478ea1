//! File formats and subcommands of the `toxsurf` command-line tool.

pub mod chainfile;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod tables;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_diagnose, cmd_fit, cmd_simulate, cmd_summarize};
pub use config::{Normalization, RunConfig};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "toxsurf", version, about = "Bayesian dose-time response surfaces for nanotoxicity screening")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sampler and store chains, telemetry and a manifest.
    Fit(Common),
    /// Risk, surface and exposure-map tables from stored chains.
    Summarize {
        #[command(flatten)]
        common: Common,
        /// Chain files or directories holding them; defaults to --out.
        #[arg(value_name = "CHAINS")]
        paths: Vec<PathBuf>,
        /// Combine chains from different runs.
        #[arg(long)]
        force: bool,
    },
    /// Simulate a dataset and its truth from the configured truth spec.
    Simulate(Common),
    /// Convergence, PIT and predictive-check tables from stored chains.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(value_name = "CHAINS")]
        paths: Vec<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML or JSON file mirroring the run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV with columns particle, outcome, replicate, dose, time, value.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed; chain `c` uses stream `c`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Burn-in iterations per chain.
    #[arg(long)]
    pub n_burnin: Option<usize>,
    /// Retained draws per chain.
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Iterations between retained draws.
    #[arg(long)]
    pub thin: Option<usize>,
    /// Points per axis of the evaluation grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Chain file or JSON state to start from.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
}

impl Common {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.data {
            cfg.data = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = &self.warm_start {
            cfg.warm_start = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.sampler.seed = v;
        }
        if let Some(v) = self.chains {
            cfg.chains = v;
        }
        if let Some(v) = self.n_burnin {
            cfg.sampler.n_burnin = v;
        }
        if let Some(v) = self.n_samples {
            cfg.sampler.n_samples = v;
        }
        if let Some(v) = self.thin {
            cfg.sampler.thin = v;
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(c) => {
            let out = cmd_fit(&c.resolve()?)?;
            for p in &out.chain_files {
                println!("{}", p.display());
            }
            println!("manifest {}", out.hash);
        }
        Command::Summarize { common, paths, force } => {
            let cfg = common.resolve()?;
            let chains = if paths.is_empty() { vec![cfg.out.clone()] } else { paths };
            cmd_summarize(&cfg, &chains, force)?;
        }
        Command::Simulate(c) => {
            let (data, truth) = cmd_simulate(&c.resolve()?)?;
            println!("{}\n{}", data.display(), truth.display());
        }
        Command::Diagnose { common, paths, force } => {
            let cfg = common.resolve()?;
            let chains = if paths.is_empty() { vec![cfg.out.clone()] } else { paths };
            cmd_diagnose(&cfg, &chains, force)?;
        }
    }
    Ok(())
}
