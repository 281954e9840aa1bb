//! Command-line front end: configuration, CSV ingestion and the `fit` and
//! `simulate` commands.

pub mod config;
pub mod data;
pub mod fit;
pub mod simulate;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::config::{threads_from_env, FitArgs, FitConfig, SimulateArgs, SimulateConfig};

#[derive(Debug, Parser)]
#[command(name = "pds-series", version, about = "Post-double-selection series estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo evaluation of the estimators on a simulated design
    Simulate(SimulateArgs),
    /// Estimate functionals of g on a CSV dataset
    Fit(FitArgs),
}

/// Runs `f` on a pool capped by `PDS_THREADS`, or on the global pool.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads_from_env()? {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(f),
        None => f(),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = SimulateConfig::resolve(&args)?;
            let out = with_thread_cap(|| simulate::run_simulate(&cfg))?;
            print!("{}", out.text);
            if let Some(path) = &cfg.dump_sample {
                println!("# sample of replication 0 written to {}", path.display());
            }
        }
        Command::Fit(args) => {
            let cfg = FitConfig::resolve(&args)?;
            let report = with_thread_cap(|| fit::run_fit(&cfg))?;
            report.write(&cfg)?;
            print!("{}", report.summary());
            println!("\nreport written to {}", cfg.out.display());
        }
    }
    Ok(())
}
