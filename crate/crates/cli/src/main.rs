// Guards written as `!(x > 0.0)` reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod export;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slowquench::exec::Exec;

use config::{Format, RunConfig};
use error::CliError;

/// Slow-quench dynamics and dynamical topological invariants.
#[derive(Parser, Debug)]
#[command(name = "slowquench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Threads for grid sweeps; 1 runs sequentially.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Nodes per axis, overriding `grid.extent`.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Comma-separated output formats, overriding `output.formats`.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form time-averaged polarization on the momentum grid.
    Sweep,
    /// Invariant extraction by the configured scheme.
    Invariant,
    /// Integrate the quench at one momentum.
    Evolve {
        /// Comma-separated momentum, overriding `evolve.k`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Option<Vec<f64>>,
    },
    /// Compare the closed form with direct integration on random fields.
    Verify {
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config(String::from("this command needs --config PATH")))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(extent) = cli.grid {
        cfg.grid.extent = extent;
    }
    if let Some(formats) = &cli.format {
        cfg.output.formats = formats.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let exec = Exec::from_workers(cli.workers);
    match &cli.command {
        Command::Sweep => commands::cmd_sweep(&load(cli)?, exec),
        Command::Invariant => commands::cmd_invariant(&load(cli)?, exec).map(|_| ()),
        Command::Evolve { k } => commands::cmd_evolve(&load(cli)?, k.clone()),
        Command::Verify { samples } => {
            if commands::cmd_verify(*samples, cli.out.clone(), exec)? {
                Ok(())
            } else {
                Err(CliError::Failed(String::from("closed form and integration disagree beyond tolerance")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
