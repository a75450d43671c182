use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::CMatrix;
use crate::rng::{gaussian_complex_matrix, RngStream};

/// Time evolution of the `N x M` Rayleigh channel across the blocks of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ChannelMode {
    /// Fresh i.i.d. draw every block.
    BlockIid,
    /// One draw per frame.
    StaticPerFrame,
    /// `H(i) = rho H(i-1) + sqrt(1 - rho^2) G(i)`.
    Ar1 { rho: f64 },
}

impl Default for ChannelMode {
    fn default() -> Self {
        ChannelMode::StaticPerFrame
    }
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelMode::BlockIid => write!(f, "block-iid"),
            ChannelMode::StaticPerFrame => write!(f, "static-per-frame"),
            ChannelMode::Ar1 { rho } => write!(f, "ar1:{rho}"),
        }
    }
}

impl FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block-iid" => Ok(ChannelMode::BlockIid),
            "static-per-frame" => Ok(ChannelMode::StaticPerFrame),
            _ => {
                let Some(rho) = s.strip_prefix("ar1:") else {
                    return param(format!(
                        "unknown channel mode '{s}' (expected block-iid, static-per-frame or ar1:<rho>)"
                    ));
                };
                let rho: f64 = rho
                    .parse()
                    .map_err(|_| Error::Parameter(format!("invalid AR(1) coefficient in '{s}'")))?;
                if !(0.0..=1.0).contains(&rho) {
                    return param(format!("AR(1) coefficient must lie in [0, 1], got {rho}"));
                }
                Ok(ChannelMode::Ar1 { rho })
            }
        }
    }
}

impl TryFrom<String> for ChannelMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ChannelMode> for String {
    fn from(c: ChannelMode) -> String {
        c.to_string()
    }
}

/// A channel realization that advances block by block.
#[derive(Debug, Clone)]
pub struct Channel {
    mode: ChannelMode,
    h: CMatrix,
    rng: RngStream,
}

impl Channel {
    pub fn new(n: usize, m: usize, mode: ChannelMode, mut rng: RngStream) -> Result<Channel> {
        let h = gaussian_complex_matrix(&mut rng, n, m, 1.0)?;
        Ok(Channel { mode, h, rng })
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    /// Moves to the next block.
    pub fn advance(&mut self) -> Result<()> {
        let (n, m) = self.h.shape();
        match self.mode {
            ChannelMode::StaticPerFrame => {}
            ChannelMode::BlockIid => self.h = gaussian_complex_matrix(&mut self.rng, n, m, 1.0)?,
            ChannelMode::Ar1 { rho } => {
                let g = gaussian_complex_matrix(&mut self.rng, n, m, 1.0)?;
                let a = crate::linalg::C64::new(rho, 0.0);
                let b = crate::linalg::C64::new((1.0 - rho * rho).max(0.0).sqrt(), 0.0);
                self.h = self.h.scale(a).add(&g.scale(b))?;
            }
        }
        Ok(())
    }
}

/// `Y = H Tx + V` with `V` i.i.d. CN(0, sigma2); `sigma2 = 0` is noiseless.
pub fn apply_channel(h: &CMatrix, tx: &CMatrix, sigma2: f64, rng: &mut RngStream) -> Result<CMatrix> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return param(format!("noise variance must be finite and nonnegative, got {sigma2}"));
    }
    let mut y = h.matmul(tx)?;
    if sigma2 > 0.0 {
        for v in y.as_mut_slice() {
            *v += rng.complex_normal(sigma2);
        }
    }
    Ok(y)
}

/// Per-symbol SNR in dB to noise variance.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_identity_channel() {
        let tx = CMatrix::from_fn(3, 2, |r, c| crate::linalg::C64::new(r as f64, c as f64));
        let y = apply_channel(&CMatrix::identity(3), &tx, 0.0, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(y, tx);
    }

    #[test]
    fn noise_energy() {
        let (n, t, sigma2) = (2, 2, 0.5);
        let h = CMatrix::zeros(n, 4);
        let tx = CMatrix::zeros(4, t);
        let mut rng = RngStream::new(4, 0);
        let draws = 100_000;
        let total: f64 = (0..draws)
            .map(|_| apply_channel(&h, &tx, sigma2, &mut rng).unwrap().fro_norm_sq())
            .sum();
        let mean = total / draws as f64;
        // ||V||^2 is a sum of 4 Exp(0.5) terms: variance 4 * 0.25 = 1, so the
        // mean's standard error is 1/sqrt(1e5)
        let expected = (n * t) as f64 * sigma2;
        assert!((mean - expected).abs() < 3.0 / (draws as f64).sqrt(), "{mean}");
    }

    #[test]
    fn deterministic_given_seed() {
        let h = CMatrix::identity(2);
        let tx = CMatrix::identity(2);
        let a = apply_channel(&h, &tx, 1.0, &mut RngStream::new(8, 1)).unwrap();
        let b = apply_channel(&h, &tx, 1.0, &mut RngStream::new(8, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch() {
        let h = CMatrix::identity(2);
        let tx = CMatrix::identity(3);
        assert!(apply_channel(&h, &tx, 0.0, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn mode_strings_round_trip() {
        for s in ["block-iid", "static-per-frame", "ar1:0.9"] {
            assert_eq!(s.parse::<ChannelMode>().unwrap().to_string(), s);
        }
        assert!("ar1:2".parse::<ChannelMode>().is_err());
        assert!("rayleigh".parse::<ChannelMode>().is_err());
    }

    #[test]
    fn static_channel_stays_put() {
        let mut c = Channel::new(2, 4, ChannelMode::StaticPerFrame, RngStream::new(1, 2)).unwrap();
        let h0 = c.h().clone();
        c.advance().unwrap();
        assert_eq!(c.h(), &h0);
        let mut c = Channel::new(2, 4, ChannelMode::BlockIid, RngStream::new(1, 2)).unwrap();
        c.advance().unwrap();
        assert_ne!(c.h(), &h0);
    }
}
