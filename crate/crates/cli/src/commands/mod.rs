mod basis;
mod ber;
mod gain;
mod landscape;
mod security;

use std::path::{Path, PathBuf};

use crate::config::{Command, ExperimentSpec};
use crate::error::Result;
use crate::output::{write_table, RunMeta, Table};

/// Files produced by one command, in write order.
pub type Written = Vec<PathBuf>;

/// Runs `cmd` from an effective spec (see [`ExperimentSpec::effective`]).
pub fn execute(cmd: Command, spec: &ExperimentSpec, out: &Path) -> Result<Written> {
    spec.validate(cmd)?;
    let meta = RunMeta::new(cmd, spec);
    let tables = match cmd {
        Command::Basis => basis::run(spec)?,
        Command::GainSweep => gain::run(spec)?,
        Command::Ber => ber::run(spec)?,
        Command::Leakage => security::leakage(spec)?,
        Command::Secrecy => security::secrecy(spec)?,
        Command::Landscape => landscape::run(spec)?,
    };
    tables
        .iter()
        .map(|(name, table)| write_table(out, name, &meta, table))
        .collect()
}

pub(crate) type Tables = Vec<(String, Table)>;

pub(crate) fn termination_name(t: ndstc::projection::Termination) -> &'static str {
    use ndstc::projection::Termination::*;
    match t {
        GradientTolerance => "gradient-tolerance",
        TargetReached => "target-reached",
        Stalled => "stalled",
        MaxIterations => "max-iterations",
    }
}
