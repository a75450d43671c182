//! Command-line front end: TOML experiment specs in, self-describing CSVs out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{Command, ExperimentSpec};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "ndstc", version, about = "Keyed nonsquare differential space-time coding experiments")]
pub struct Cli {
    /// TOML experiment file; every key is optional except `schema_version`.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Directory for the CSV outputs.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Master seed, overriding the file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Monte Carlo trials (frames per SNR point for `ber`).
    #[arg(long, global = true)]
    pub trials: Option<usize>,

    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Optimize one projection vector and report its coding gain.
    Basis,
    /// Coding gain against support size and time slots for all schemes.
    GainSweep,
    /// Bit error rate over an SNR grid.
    Ber,
    /// Eavesdropper leakage probability against antenna count.
    Leakage,
    /// Average mutual information of both receivers and the secrecy rate.
    Secrecy,
    /// Objective surface and optimizer trajectories.
    Landscape,
    /// Rerun the experiment embedded in a CSV written by this tool.
    Replay {
        file: PathBuf,
    },
}

impl Sub {
    fn command(&self) -> Option<Command> {
        Some(match self {
            Sub::Basis => Command::Basis,
            Sub::GainSweep => Command::GainSweep,
            Sub::Ber => Command::Ber,
            Sub::Leakage => Command::Leakage,
            Sub::Secrecy => Command::Secrecy,
            Sub::Landscape => Command::Landscape,
            Sub::Replay { .. } => return None,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Resolves the effective spec and runs the command, returning the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be positive"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let (cmd, spec) = match (&cli.command, cli.command.command()) {
        (Sub::Replay { file }, _) => {
            if cli.config.is_some() || cli.seed.is_some() || cli.trials.is_some() {
                return Err(CliError::config(
                    "replay takes its spec from the file; --config, --seed and --trials are not allowed",
                ));
            }
            let parsed = output::parse_output(&read(file)?)?;
            let spec = ExperimentSpec::parse(&parsed.spec_toml)?;
            (parsed.command, spec)
        }
        (_, Some(cmd)) => {
            let mut spec = match &cli.config {
                Some(path) => ExperimentSpec::parse(&read(path)?)?,
                None => ExperimentSpec::default(),
            };
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            if let Some(n) = cli.trials {
                spec.override_trials(cmd, n)?;
            }
            (cmd, spec)
        }
        _ => unreachable!("every other subcommand names a command"),
    };
    commands::execute(cmd, &spec.effective(cmd), &cli.out)
}
