//! Frame-level Monte Carlo of the differential link.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{duc_codebook_padded, AdsmCodebook, Codebook, DEFAULT_DUC_BUDGET};
use crate::error::{param, Error, Result};
use crate::linalg::{CMatrix, Monomial};
use crate::projection::{conventional_basis, OptimizerOptions};
use crate::rng::{random_unitary, random_word, RngStream};
use crate::security::{derive_basis_from_key, SecretSeed};
use crate::stats::Estimate;

use super::channel::{apply_channel, noise_variance, Channel, ChannelMode};
use super::detector::Detector;
use super::state::{Encoder, Receiver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    /// ADSM over the block-diagonal DFT basis, preamble = the basis itself.
    ConventionalAdsm,
    /// DUC over the block-diagonal DFT basis.
    ConventionalDuc,
    /// ADSM over the keyed optimized basis, preamble = a random unitary.
    Proposed,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ConventionalAdsm => "conventional-adsm",
            Scheme::ConventionalDuc => "conventional-duc",
            Scheme::Proposed => "proposed",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional-adsm" => Ok(Scheme::ConventionalAdsm),
            "conventional-duc" => Ok(Scheme::ConventionalDuc),
            "proposed" => Ok(Scheme::Proposed),
            _ => param(format!(
                "unknown scheme '{s}' (expected proposed, conventional-adsm or conventional-duc)"
            )),
        }
    }
}

impl TryFrom<String> for Scheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub nb: usize,
    /// Bits per block.
    pub bits: u32,
    pub snr_db: Vec<f64>,
    /// Reference insertion ratio `M / W`.
    pub eta: f64,
    pub channel_mode: ChannelMode,
    pub scheme: Scheme,
    /// Seed of all channel, noise, payload and preamble randomness.
    pub seed: u64,
    /// Shared key of the proposed scheme.
    pub key: u64,
    pub optimizer: OptimizerOptions,
    pub duc_budget: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            m: 16,
            n: 2,
            t: 1,
            nb: 16,
            bits: 6,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            eta: 0.05,
            channel_mode: ChannelMode::StaticPerFrame,
            scheme: Scheme::Proposed,
            seed: 0,
            key: 0,
            optimizer: OptimizerOptions::default(),
            duc_budget: DEFAULT_DUC_BUDGET,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        let LinkConfig { m, n, t, nb, .. } = *self;
        if !crate::error::is_power_of_two(m) {
            return param(format!("M must be a power of two, got {m}"));
        }
        if n == 0 {
            return param("N must be at least 1");
        }
        if t == 0 || m % t != 0 {
            return param(format!("T={t} must be a positive divisor of M={m}"));
        }
        if nb == 0 || nb > m || m % nb != 0 {
            return param(format!("Nb={nb} must divide M={m}"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return param("SNR grid values must be finite");
        }
        if matches!(self.scheme, Scheme::Proposed | Scheme::ConventionalAdsm) {
            self.psk_order()?;
        }
        self.frame_length()?;
        Ok(())
    }

    /// PSK order of the ADSM codebook, `2^B / M`.
    pub fn psk_order(&self) -> Result<usize> {
        let b1 = self.m.trailing_zeros();
        if self.bits <= b1 || self.bits - b1 > 16 {
            return param(format!(
                "ADSM with M={} needs B in {}..={}, got {}",
                self.m,
                b1 + 1,
                b1 + 16,
                self.bits
            ));
        }
        Ok(1 << (self.bits - b1))
    }

    /// Frame length `W = M / eta` in blocks.
    pub fn frame_length(&self) -> Result<usize> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return param(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        let w = self.m as f64 / self.eta;
        let wr = w.round();
        if (w - wr).abs() > 1e-9 * w {
            return param(format!("M/eta = {w} is not an integer frame length"));
        }
        let w = wr as usize;
        let pre = self.preamble_blocks();
        if w % pre != 0 || w <= pre {
            return param(format!(
                "frame length {w} must be a multiple of the {pre} preamble blocks and exceed them"
            ));
        }
        Ok(w)
    }

    pub fn preamble_blocks(&self) -> usize {
        self.m / self.t
    }

    pub fn data_blocks(&self) -> Result<usize> {
        Ok(self.frame_length()? - self.preamble_blocks())
    }
}

#[derive(Debug, Clone)]
pub enum Preamble {
    /// A fresh Haar unitary per frame, split into `M/T` blocks.
    RandomUnitary,
    /// The fixed basis `[E_1, ..., E_{M/T}]`.
    Basis(Vec<CMatrix>),
}

/// Everything fixed across frames: codebook, projection and detector.
#[derive(Debug, Clone)]
pub struct LinkSetup {
    pub codebook: Codebook,
    pub codewords: Vec<Monomial>,
    pub e1: CMatrix,
    pub preamble: Preamble,
    pub detector: Detector,
}

impl LinkSetup {
    pub fn new(cfg: &LinkConfig) -> Result<LinkSetup> {
        cfg.validate()?;
        match cfg.scheme {
            Scheme::Proposed => {
                let l = cfg.psk_order()?;
                let e1 = derive_basis_from_key(
                    SecretSeed(cfg.key),
                    cfg.m,
                    cfg.nb,
                    cfg.t,
                    l,
                    &cfg.optimizer,
                )?;
                let cb = Codebook::Adsm(AdsmCodebook::new(cfg.m, l)?);
                LinkSetup::with_projection(cb, e1.into_matrix(), Preamble::RandomUnitary)
            }
            Scheme::ConventionalAdsm => {
                let basis = conventional_basis(cfg.m, cfg.nb, cfg.t)?;
                let cb = Codebook::Adsm(AdsmCodebook::new(cfg.m, cfg.psk_order()?)?);
                LinkSetup::with_projection(
                    cb,
                    basis.e1().clone(),
                    Preamble::Basis(basis.matrices().to_vec()),
                )
            }
            Scheme::ConventionalDuc => {
                let basis = conventional_basis(cfg.m, cfg.nb, cfg.t)?;
                let used = support_rows(basis.e1());
                let design = duc_codebook_padded(cfg.m, used, cfg.bits, cfg.duc_budget)?;
                LinkSetup::with_projection(
                    Codebook::Duc(design.codebook),
                    basis.e1().clone(),
                    Preamble::Basis(basis.matrices().to_vec()),
                )
            }
        }
    }

    pub fn with_projection(codebook: Codebook, e1: CMatrix, preamble: Preamble) -> Result<LinkSetup> {
        let detector = Detector::new(&codebook, &e1)?;
        Ok(LinkSetup {
            codewords: codebook.codewords(),
            codebook,
            e1,
            preamble,
            detector,
        })
    }
}

/// Number of leading antennas a projection matrix drives (last nonzero row + 1).
pub fn support_rows(e: &CMatrix) -> usize {
    (0..e.rows())
        .rev()
        .find(|&r| e.row(r).iter().any(|v| v.norm() > 0.0))
        .map_or(0, |r| r + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameOutcome {
    pub bits: u64,
    pub bit_errors: u64,
    /// Data blocks whose codeword was misdetected.
    pub block_errors: u64,
}

const STREAM_CHANNEL: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_PAYLOAD: u64 = 2;
const STREAM_PREAMBLE: u64 = 3;

/// One full frame: `M/T` preamble blocks, then `W - M/T` data blocks.
///
/// Channel, noise and payload come from separate substreams of `rng`, so two
/// setups simulated with the same `rng` see the same channel and bits.
pub fn simulate_frame(
    cfg: &LinkConfig,
    setup: &LinkSetup,
    sigma2: f64,
    rng: &RngStream,
) -> Result<FrameOutcome> {
    let (m, t) = (cfg.m, cfg.t);
    let mut channel = Channel::new(cfg.n, m, cfg.channel_mode, rng.derive(STREAM_CHANNEL))?;
    let mut noise = rng.derive(STREAM_NOISE);
    let mut payload = rng.derive(STREAM_PAYLOAD);

    let blocks: Vec<CMatrix> = match &setup.preamble {
        Preamble::RandomUnitary => {
            let u = random_unitary(&mut rng.derive(STREAM_PREAMBLE), m)?;
            (0..m / t).map(|k| u.columns(k * t, t)).collect()
        }
        Preamble::Basis(b) => b.clone(),
    };

    let mut encoder = Encoder::new(m, t)?;
    let mut receiver = Receiver::new(cfg.n, m, t, sigma2)?;
    let mut first = true;
    for block in &blocks {
        if !first {
            channel.advance()?;
        }
        first = false;
        let tx = encoder.preamble(block)?;
        let y = apply_channel(channel.h(), &tx, sigma2, &mut noise)?;
        receiver.accept_preamble(&y, block)?;
    }

    let mut out = FrameOutcome::default();
    for _ in 0..cfg.data_blocks()? {
        channel.advance()?;
        let word = random_word(&mut payload, cfg.bits);
        let tx = encoder.encode(&setup.codewords[word as usize], &setup.e1)?;
        let y = apply_channel(channel.h(), &tx, sigma2, &mut noise)?;
        let got = receiver.receive(&y, &setup.detector, &setup.codewords, &setup.e1)?;
        let errs = (got ^ word).count_ones() as u64;
        out.bits += cfg.bits as u64;
        out.bit_errors += errs;
        out.block_errors += (errs > 0) as u64;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRow {
    pub snr_db: f64,
    pub frames: usize,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Standard error of the BER from the spread of per-frame BERs.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerResult {
    pub rows: Vec<BerRow>,
    pub bit_count: u64,
    pub frame_count: usize,
    /// Pooled over all SNR points.
    pub ber: f64,
}

/// Frames needed to reach at least `bits` data bits per SNR point.
pub fn frames_for_bits(cfg: &LinkConfig, bits: u64) -> Result<usize> {
    let per_frame = cfg.data_blocks()? as u64 * cfg.bits as u64;
    Ok(bits.div_ceil(per_frame) as usize)
}

pub fn run_link(cfg: &LinkConfig, n_frames: usize) -> Result<BerResult> {
    let setup = LinkSetup::new(cfg)?;
    run_link_with(cfg, &setup, n_frames)
}

/// BER over the SNR grid. Frame `f` at grid index `i` uses the substream
/// `(i, f)` of the seed, independent of the scheme and projection.
pub fn run_link_with(cfg: &LinkConfig, setup: &LinkSetup, n_frames: usize) -> Result<BerResult> {
    cfg.validate()?;
    if n_frames == 0 {
        return param("at least one frame is required");
    }
    let root = RngStream::new(cfg.seed, 0);
    let mut rows = Vec::with_capacity(cfg.snr_db.len());
    for (i, &snr) in cfg.snr_db.iter().enumerate() {
        let sigma2 = noise_variance(snr);
        let frames: Vec<FrameOutcome> = (0..n_frames)
            .into_par_iter()
            .map(|f| simulate_frame(cfg, setup, sigma2, &root.derive_path(&[i as u64, f as u64])))
            .collect::<Result<_>>()?;
        let bits: u64 = frames.iter().map(|f| f.bits).sum();
        let bit_errors: u64 = frames.iter().map(|f| f.bit_errors).sum();
        let per_frame: Vec<f64> = frames
            .iter()
            .map(|f| f.bit_errors as f64 / f.bits as f64)
            .collect();
        rows.push(BerRow {
            snr_db: snr,
            frames: n_frames,
            bits,
            bit_errors,
            ber: bit_errors as f64 / bits as f64,
            stderr: Estimate::from_samples(&per_frame).stderr,
        });
    }
    let bit_count = rows.iter().map(|r| r.bits).sum();
    let errors: u64 = rows.iter().map(|r| r.bit_errors).sum();
    Ok(BerResult {
        frame_count: n_frames * rows.len(),
        ber: errors as f64 / bit_count as f64,
        bit_count,
        rows,
    })
}
