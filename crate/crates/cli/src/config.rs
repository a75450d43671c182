//! TOML experiment files.
//!
//! A file holds `schema_version`, a master `seed` and one optional table per
//! subcommand. Missing tables and keys take their defaults; unknown keys are
//! rejected. Every run writes its effective spec, with all defaults filled
//! in, into the header of each CSV it produces.

use std::fmt;

use ndstc::projection::StepRule;
use ndstc::security::NoiseCoupling;
use ndstc::transceiver::{ChannelMode, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Basis,
    GainSweep,
    Ber,
    Leakage,
    Secrecy,
    Landscape,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Basis,
        Command::GainSweep,
        Command::Ber,
        Command::Leakage,
        Command::Secrecy,
        Command::Landscape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::GainSweep => "gain-sweep",
            Command::Ber => "ber",
            Command::Leakage => "leakage",
            Command::Secrecy => "secrecy",
            Command::Landscape => "landscape",
        }
    }

    pub fn from_name(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_sweep: Option<GainSweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ber: Option<BerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage: Option<LeakageSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secrecy: Option<SecrecySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeSpec>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            basis: None,
            gain_sweep: None,
            ber: None,
            leakage: None,
            secrecy: None,
            landscape: None,
        }
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        if spec.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "unsupported schema_version {}; this build reads version {SCHEMA_VERSION}",
                spec.schema_version
            )));
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment specs always serialize")
    }

    /// The experiment restricted to one command's table, defaults filled in.
    pub fn effective(&self, cmd: Command) -> ExperimentSpec {
        let mut out = ExperimentSpec {
            seed: self.seed,
            ..ExperimentSpec::default()
        };
        match cmd {
            Command::Basis => {
                let mut s = self.basis.clone().unwrap_or_default();
                s.nb.get_or_insert(s.m);
                out.basis = Some(s);
            }
            Command::GainSweep => out.gain_sweep = Some(self.gain_sweep.clone().unwrap_or_default()),
            Command::Ber => out.ber = Some(self.ber.clone().unwrap_or_default()),
            Command::Leakage => out.leakage = Some(self.leakage.clone().unwrap_or_default()),
            Command::Secrecy => {
                let mut s = self.secrecy.clone().unwrap_or_default();
                s.nb.get_or_insert(s.m);
                out.secrecy = Some(s);
            }
            Command::Landscape => out.landscape = Some(self.landscape.clone().unwrap_or_default()),
        }
        out
    }

    /// Applies `--trials`: Monte Carlo trials for the security commands,
    /// frames per SNR point for `ber`.
    pub fn override_trials(&mut self, cmd: Command, trials: usize) -> Result<()> {
        match cmd {
            Command::Ber => self.ber.get_or_insert_with(Default::default).frames = Some(trials),
            Command::Leakage => self.leakage.get_or_insert_with(Default::default).trials = trials,
            Command::Secrecy => self.secrecy.get_or_insert_with(Default::default).trials = trials,
            other => {
                return Err(CliError::config(format!("--trials does not apply to `{other}`")));
            }
        }
        Ok(())
    }

    pub fn validate(&self, cmd: Command) -> Result<()> {
        match cmd {
            Command::Basis => self.basis.as_ref().map_or(Ok(()), BasisSpec::validate),
            Command::GainSweep => self.gain_sweep.as_ref().map_or(Ok(()), GainSweepSpec::validate),
            Command::Ber => self.ber.as_ref().map_or(Ok(()), BerSpec::validate),
            Command::Leakage => self.leakage.as_ref().map_or(Ok(()), LeakageSpec::validate),
            Command::Secrecy => self.secrecy.as_ref().map_or(Ok(()), SecrecySpec::validate),
            Command::Landscape => self.landscape.as_ref().map_or(Ok(()), LandscapeSpec::validate),
        }
    }
}

fn power_of_two(name: &str, v: usize) -> Result<()> {
    if v == 0 || v & (v - 1) != 0 {
        return Err(CliError::config(format!("{name} = {v} must be a power of two")));
    }
    Ok(())
}

fn divides(name: &str, d: usize, m: usize) -> Result<()> {
    if d == 0 || m % d != 0 {
        return Err(CliError::config(format!("{name} = {d} must divide M = {m}")));
    }
    Ok(())
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(CliError::config(format!("{name} must be positive")));
    }
    Ok(())
}

fn finite_grid(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::config(format!("{name} must be a non-empty list of finite values")));
    }
    Ok(())
}

/// PSK order `2^B / M` for an ADSM codebook.
pub fn psk_order(m: usize, bits: u32) -> Result<usize> {
    let b1 = m.trailing_zeros();
    if bits <= b1 || bits >= 63 {
        return Err(CliError::config(format!(
            "bits = {bits} must exceed log2(M) = {b1} for the ADSM codebook"
        )));
    }
    Ok(1usize << (bits - b1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub tol: f64,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        let d = ndstc::projection::OptimizerOptions::default();
        OptimizerSpec {
            restarts: d.restarts,
            max_iters: d.max_iters,
            step_rule: d.step_rule,
            tol: d.tol,
        }
    }
}

impl OptimizerSpec {
    pub fn options(&self, record_path: bool) -> ndstc::projection::OptimizerOptions {
        ndstc::projection::OptimizerOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            step_rule: self.step_rule,
            tol: self.tol,
            record_path,
        }
    }

    fn validate(&self) -> Result<()> {
        positive("optimizer.restarts", self.restarts)?;
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::config("optimizer.tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSpec {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub reg_weight: f64,
    /// Eve's SNR in dB for the prior and detection; absent means noiseless.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_eve_db: Option<f64>,
    pub noise_free_prior: bool,
    pub oracle: bool,
}

impl Default for AttackSpec {
    fn default() -> Self {
        let d = ndstc::security::AttackConfig::default();
        AttackSpec {
            restarts: d.restarts,
            max_iters: d.max_iters,
            step_rule: d.step_rule,
            reg_weight: d.reg_weight,
            snr_eve_db: d.snr_eve_db,
            noise_free_prior: d.noise_free_prior,
            oracle: d.oracle,
        }
    }
}

impl AttackSpec {
    pub fn config(&self, n_eve: usize) -> ndstc::security::AttackConfig {
        ndstc::security::AttackConfig {
            n_eve,
            assume_perfect_csi: true,
            noise_free_prior: self.noise_free_prior,
            restarts: self.restarts,
            max_iters: self.max_iters,
            reg_weight: self.reg_weight,
            step_rule: self.step_rule,
            snr_eve_db: self.snr_eve_db,
            oracle: self.oracle,
        }
    }

    fn validate(&self, n_eve: &[usize]) -> Result<()> {
        if n_eve.is_empty() {
            return Err(CliError::config("n_eve list must not be empty"));
        }
        for &n in n_eve {
            self.config(n)
                .validate()
                .map_err(|e| CliError::config(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSpec {
    pub m: usize,
    /// Support size of the optimized vector; defaults to `m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nb: Option<usize>,
    pub t: usize,
    pub l: usize,
    pub n_rx: usize,
    pub optimizer: OptimizerSpec,
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec {
            m: 16,
            nb: None,
            t: 1,
            l: 4,
            n_rx: 2,
            optimizer: OptimizerSpec::default(),
        }
    }
}

impl BasisSpec {
    pub fn nb(&self) -> usize {
        self.nb.unwrap_or(self.m)
    }

    fn validate(&self) -> Result<()> {
        power_of_two("basis.m", self.m)?;
        power_of_two("basis.nb", self.nb())?;
        divides("basis.nb", self.nb(), self.m)?;
        divides("basis.t", self.t, self.m)?;
        power_of_two("basis.l", self.l)?;
        positive("basis.n_rx", self.n_rx)?;
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainSweepSpec {
    pub m: usize,
    pub l: usize,
    pub n_rx: usize,
    /// Support sizes swept at `T = 1`.
    pub nb_values: Vec<usize>,
    /// Time slots swept at `Nb = M`.
    pub t_values: Vec<usize>,
    pub duc_budget: f64,
    /// Largest `B` for the pairwise gain search.
    pub pairwise_bits: u32,
    pub optimizer: OptimizerSpec,
}

impl Default for GainSweepSpec {
    fn default() -> Self {
        GainSweepSpec {
            m: 16,
            l: 4,
            n_rx: 2,
            nb_values: vec![1, 2, 4, 8, 16],
            t_values: vec![1, 2, 4, 8, 16],
            duc_budget: ndstc::codebook::DEFAULT_DUC_BUDGET,
            pairwise_bits: ndstc::projection::DEFAULT_PAIRWISE_BITS,
            optimizer: OptimizerSpec::default(),
        }
    }
}

impl GainSweepSpec {
    fn validate(&self) -> Result<()> {
        power_of_two("gain_sweep.m", self.m)?;
        power_of_two("gain_sweep.l", self.l)?;
        positive("gain_sweep.n_rx", self.n_rx)?;
        for &nb in &self.nb_values {
            power_of_two("gain_sweep.nb_values entry", nb)?;
            divides("gain_sweep.nb_values entry", nb, self.m)?;
        }
        for &t in &self.t_values {
            divides("gain_sweep.t_values entry", t, self.m)?;
        }
        if !(self.duc_budget > 0.0) {
            return Err(CliError::config("gain_sweep.duc_budget must be positive"));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerSpec {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub nb: usize,
    pub bits: u32,
    pub snr_db: Vec<f64>,
    pub eta: f64,
    pub channel_mode: ChannelMode,
    pub schemes: Vec<Scheme>,
    /// Shared key of the proposed scheme.
    pub key: u64,
    /// Data bits simulated per SNR point, rounded up to whole frames.
    pub min_bits: u64,
    /// Frames per SNR point; overrides `min_bits`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<usize>,
    pub duc_budget: f64,
    pub optimizer: OptimizerSpec,
}

impl Default for BerSpec {
    fn default() -> Self {
        BerSpec {
            m: 16,
            n: 2,
            t: 1,
            nb: 16,
            bits: 6,
            snr_db: (0..=6).map(|i| 4.0 * i as f64).collect(),
            eta: 0.05,
            channel_mode: ChannelMode::StaticPerFrame,
            schemes: vec![Scheme::Proposed],
            key: 1,
            min_bits: 1_000_000,
            frames: None,
            duc_budget: ndstc::codebook::DEFAULT_DUC_BUDGET,
            optimizer: OptimizerSpec::default(),
        }
    }
}

impl BerSpec {
    pub fn link(&self, scheme: Scheme, seed: u64) -> ndstc::transceiver::LinkConfig {
        ndstc::transceiver::LinkConfig {
            m: self.m,
            n: self.n,
            t: self.t,
            nb: self.nb,
            bits: self.bits,
            snr_db: self.snr_db.clone(),
            eta: self.eta,
            channel_mode: self.channel_mode,
            scheme,
            seed,
            key: self.key,
            optimizer: self.optimizer.options(false),
            duc_budget: self.duc_budget,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(CliError::config("ber.schemes must not be empty"));
        }
        finite_grid("ber.snr_db", &self.snr_db)?;
        if self.frames == Some(0) || (self.frames.is_none() && self.min_bits == 0) {
            return Err(CliError::config("ber needs a positive frame or bit count"));
        }
        for &s in &self.schemes {
            self.link(s, 0)
                .validate()
                .map_err(|e| CliError::config(e.to_string()))?;
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeakageSpec {
    pub m_values: Vec<usize>,
    pub n_eve_values: Vec<usize>,
    /// Support size; absent means dense (`Nb = M`) at every point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nb: Option<usize>,
    pub t: usize,
    pub l: usize,
    pub trials: usize,
    /// Data blocks Eve detects per trial; absent means one frame, `20M - M/T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_blocks: Option<usize>,
    pub alice: OptimizerSpec,
    pub attack: AttackSpec,
}

impl Default for LeakageSpec {
    fn default() -> Self {
        LeakageSpec {
            m_values: vec![2, 4, 8, 16, 32],
            n_eve_values: vec![2],
            nb: None,
            t: 1,
            l: 4,
            trials: 200,
            data_blocks: None,
            alice: OptimizerSpec::default(),
            attack: AttackSpec::default(),
        }
    }
}

impl LeakageSpec {
    pub fn config(&self, m: usize, n_eve: usize, seed: u64) -> ndstc::security::LeakageConfig {
        ndstc::security::LeakageConfig {
            m,
            nb: self.nb.unwrap_or(m),
            t: self.t,
            l: self.l,
            trials: self.trials,
            data_blocks: self.data_blocks,
            seed,
            alice: self.alice.options(false),
            attack: self.attack.config(n_eve),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() {
            return Err(CliError::config("leakage.m_values must not be empty"));
        }
        for &m in &self.m_values {
            power_of_two("leakage.m_values entry", m)?;
            let nb = self.nb.unwrap_or(m);
            power_of_two("leakage.nb", nb)?;
            divides("leakage.nb", nb, m)?;
            divides("leakage.t", self.t, m)?;
        }
        power_of_two("leakage.l", self.l)?;
        positive("leakage.trials", self.trials)?;
        if self.data_blocks == Some(0) {
            return Err(CliError::config("leakage.data_blocks must be positive"));
        }
        self.alice.validate()?;
        self.attack.validate(&self.n_eve_values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecrecySpec {
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nb: Option<usize>,
    pub t: usize,
    pub bits: u32,
    pub n_bob: usize,
    pub n_eve_values: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub noise_draws: usize,
    pub coupling: NoiseCoupling,
    pub budget_bits: u32,
    pub alice: OptimizerSpec,
    pub attack: AttackSpec,
}

impl Default for SecrecySpec {
    fn default() -> Self {
        SecrecySpec {
            m: 16,
            nb: None,
            t: 1,
            bits: 6,
            n_bob: 2,
            n_eve_values: vec![4, 8, 16],
            snr_db: (-2..=6).map(|i| 5.0 * i as f64).collect(),
            trials: 200,
            noise_draws: 1,
            coupling: NoiseCoupling::Shared,
            budget_bits: 10,
            alice: OptimizerSpec::default(),
            attack: AttackSpec::default(),
        }
    }
}

impl SecrecySpec {
    pub fn config(&self, n_eve: usize, seed: u64) -> ndstc::security::AmiConfig {
        ndstc::security::AmiConfig {
            m: self.m,
            nb: self.nb.unwrap_or(self.m),
            t: self.t,
            bits: self.bits,
            n_bob: self.n_bob,
            snr_db: self.snr_db.clone(),
            trials: self.trials,
            noise_draws: self.noise_draws,
            seed,
            alice: self.alice.options(false),
            attack: self.attack.config(n_eve),
            coupling: self.coupling,
            budget_bits: self.budget_bits,
        }
    }

    fn validate(&self) -> Result<()> {
        power_of_two("secrecy.m", self.m)?;
        let nb = self.nb.unwrap_or(self.m);
        power_of_two("secrecy.nb", nb)?;
        divides("secrecy.nb", nb, self.m)?;
        divides("secrecy.t", self.t, self.m)?;
        psk_order(self.m, self.bits)?;
        positive("secrecy.n_bob", self.n_bob)?;
        positive("secrecy.trials", self.trials)?;
        positive("secrecy.noise_draws", self.noise_draws)?;
        finite_grid("secrecy.snr_db", &self.snr_db)?;
        self.alice.validate()?;
        self.attack.validate(&self.n_eve_values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeSpec {
    pub m: usize,
    pub l: usize,
    /// Grid points per swept angle over `[0, 2 pi)`.
    pub grid: usize,
    /// Angle indices swept for `M > 2`; the others stay at a seeded random point.
    pub axes: [usize; 2],
    pub optimizer: OptimizerSpec,
}

impl Default for LandscapeSpec {
    fn default() -> Self {
        LandscapeSpec {
            m: 2,
            l: 4,
            grid: 256,
            axes: [1, 2],
            optimizer: OptimizerSpec {
                restarts: 8,
                ..OptimizerSpec::default()
            },
        }
    }
}

impl LandscapeSpec {
    fn validate(&self) -> Result<()> {
        power_of_two("landscape.m", self.m)?;
        if self.m < 2 {
            return Err(CliError::config("landscape.m must be at least 2"));
        }
        power_of_two("landscape.l", self.l)?;
        positive("landscape.grid", self.grid)?;
        if self.m > 2 {
            let [a, b] = self.axes;
            if a == 0 || b == 0 || a >= self.m || b >= self.m || a == b {
                return Err(CliError::config(format!(
                    "landscape.axes must be two distinct angle indices in 1..{}",
                    self.m
                )));
            }
        }
        self.optimizer.validate()
    }
}
