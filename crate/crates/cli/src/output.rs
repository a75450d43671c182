//! CSV files with a commented metadata header.
//!
//! ```text
//! # ndstc 0.1.0
//! # command: ber
//! # rng: chacha8/splitmix64-derive
//! # seed: 7
//! # spec-sha256: 3f1c...
//! # spec: schema_version = 1
//! # spec: seed = 7
//! # spec: ...
//! snr_db,ber,...
//! ```
//!
//! Everything after the last `#` line is the body. Bodies depend only on the
//! embedded spec, so a replay reproduces them byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{Command, ExperimentSpec};
use crate::error::{CliError, Result};

const SPEC_PREFIX: &str = "# spec: ";
const COMMAND_PREFIX: &str = "# command: ";
const HASH_PREFIX: &str = "# spec-sha256: ";

pub fn spec_hash(spec_toml: &str) -> String {
    format!("{:x}", Sha256::digest(spec_toml.as_bytes()))
}

#[derive(Debug, Clone)]
pub struct RunMeta {
    pub command: Command,
    pub seed: u64,
    pub spec_toml: String,
}

impl RunMeta {
    pub fn new(command: Command, spec: &ExperimentSpec) -> Self {
        RunMeta {
            command,
            seed: spec.seed,
            spec_toml: spec.to_toml(),
        }
    }

    pub fn header(&self) -> String {
        let mut h = format!(
            "# ndstc {}\n{COMMAND_PREFIX}{}\n# rng: {}\n# seed: {}\n{HASH_PREFIX}{}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            ndstc::rng::RNG_ALGORITHM_ID,
            self.seed,
            spec_hash(&self.spec_toml),
        );
        for line in self.spec_toml.lines() {
            h.push_str(SPEC_PREFIX);
            h.push_str(line);
            h.push('\n');
        }
        h
    }
}

/// A rectangular table of already formatted cells.
#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn body(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Formats a float with the shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_table(dir: &Path, name: &str, meta: &RunMeta, table: &Table) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let mut bytes = meta.header().into_bytes();
    bytes.extend(table.body());
    fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Splits a file written by [`write_table`] into metadata and body.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedOutput {
    pub command: Command,
    pub spec_toml: String,
    pub body: String,
}

pub fn parse_output(text: &str) -> Result<ParsedOutput> {
    let mut command = None;
    let mut hash = None;
    let mut spec = String::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        body_start += line.len();
        let line = line.trim_end_matches('\n');
        if let Some(rest) = line.strip_prefix(SPEC_PREFIX) {
            spec.push_str(rest);
            spec.push('\n');
        } else if line == SPEC_PREFIX.trim_end() {
            spec.push('\n');
        } else if let Some(rest) = line.strip_prefix(COMMAND_PREFIX) {
            command = Command::from_name(rest.trim());
        } else if let Some(rest) = line.strip_prefix(HASH_PREFIX) {
            hash = Some(rest.trim().to_string());
        }
    }
    let command = command.ok_or_else(|| CliError::config("output header names no known command"))?;
    let hash = hash.ok_or_else(|| CliError::config("output header has no spec hash"))?;
    if spec_hash(&spec) != hash {
        return Err(CliError::config("embedded spec does not match its recorded hash"));
    }
    Ok(ParsedOutput {
        command,
        spec_toml: spec,
        body: text[body_start..].to_string(),
    })
}
