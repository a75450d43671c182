//! Average mutual information under finite-alphabet signaling.
//!
//! For a transmitted label `p` and received `Y`, the inner term is
//! `log2 sum_q p(Y | q) / p(Y | p)`; with Gaussian noise each ratio is
//! `exp(eta_pq)`, and the log-sum is evaluated with max-subtraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{AdsmCodebook, Codebook};
use crate::error::{param, Result};
use crate::linalg::CMatrix;
use crate::projection::OptimizerOptions;
use crate::rng::{gaussian_complex_matrix, RngStream};
use crate::stats::{log2_sum_exp, Estimate};
use crate::transceiver::noise_variance;

use super::attack::{attack_trial, trial_basis, AttackConfig};
use super::secrecy_rate;

/// How Eve's two likelihood terms see the noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseCoupling {
    /// Both terms share one noise draw: the exact mismatched log-likelihood ratio.
    #[default]
    Shared,
    /// The normalizing term uses an independent draw.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmiConfig {
    pub m: usize,
    pub nb: usize,
    pub t: usize,
    /// Bits per block; the ADSM PSK order is `2^B / M`.
    pub bits: u32,
    pub n_bob: usize,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    /// Noise draws per transmitted label and trial.
    pub noise_draws: usize,
    pub seed: u64,
    pub alice: OptimizerOptions,
    pub attack: AttackConfig,
    pub coupling: NoiseCoupling,
    /// Largest `B` for which the `2^B x 2^B` enumeration is allowed.
    pub budget_bits: u32,
}

impl Default for AmiConfig {
    fn default() -> Self {
        AmiConfig {
            m: 16,
            nb: 16,
            t: 1,
            bits: 6,
            n_bob: 2,
            snr_db: vec![-10.0, 0.0, 10.0, 20.0, 30.0],
            trials: 200,
            noise_draws: 1,
            seed: 0,
            alice: OptimizerOptions::default(),
            attack: AttackConfig::default(),
            coupling: NoiseCoupling::Shared,
            budget_bits: 10,
        }
    }
}

impl AmiConfig {
    fn codebook(&self) -> Result<AdsmCodebook> {
        if self.bits > self.budget_bits {
            return Err(crate::Error::Infeasible(format!(
                "mutual information over 2^{} labels exceeds the 2^{} budget",
                self.bits, self.budget_bits
            )));
        }
        let b1 = self.m.trailing_zeros();
        if self.bits <= b1 {
            return param(format!("B={} too small for ADSM with M={}", self.bits, self.m));
        }
        if self.t == 0 || self.m % self.t != 0 {
            return param(format!("T={} must divide M={}", self.t, self.m));
        }
        if self.trials == 0 || self.noise_draws == 0 {
            return param("trials and noise draws must be positive");
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return param("AMI needs finite SNR values");
        }
        AdsmCodebook::new(self.m, 1 << (self.bits - b1))
    }

    fn max_rate(&self) -> f64 {
        self.bits as f64 / self.t as f64
    }
}

/// `H X_q E` for every label.
fn projected_all(cb: &AdsmCodebook, h: &CMatrix, e: &CMatrix) -> Result<Vec<CMatrix>> {
    let codebook = Codebook::Adsm(*cb);
    codebook
        .codewords()
        .iter()
        .map(|x| x.right_apply(h).matmul(e))
        .collect()
}

fn dist_sq(a: &CMatrix, b: &CMatrix, v: &CMatrix, scale: f64) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .zip(v.as_slice())
        .map(|((x, y), w)| (x - y + w * scale).norm_sqr())
        .sum()
}

const TRIAL_BOB_CHANNEL: u64 = 10;
const TRIAL_NOISE: u64 = 11;
const TRIAL_NOISE_AUX: u64 = 12;

/// Unit-variance noise for `(label, draw)`, shared by every SNR point.
fn unit_noise(rng: &RngStream, rows: usize, cols: usize, p: usize, d: usize) -> Result<CMatrix> {
    gaussian_complex_matrix(&mut rng.derive_path(&[p as u64, d as u64]), rows, cols, 1.0)
}

/// Per-SNR AMI of one trial, each clamped to `[0, B/T]`.
fn trial_rates(
    cfg: &AmiConfig,
    truth: &[CMatrix],
    metric: &[CMatrix],
    rng: &RngStream,
    coupling: Option<NoiseCoupling>,
) -> Result<Vec<f64>> {
    let size = truth.len();
    let (rows, cols) = truth[0].shape();
    let noise_rng = rng.derive(TRIAL_NOISE);
    let aux_rng = rng.derive(TRIAL_NOISE_AUX);
    let mut sums = vec![0.0; cfg.snr_db.len()];
    let mut eta = vec![0.0; size];
    for p in 0..size {
        for d in 0..cfg.noise_draws {
            let w = unit_noise(&noise_rng, rows, cols, p, d)?;
            let w_aux = match coupling {
                Some(NoiseCoupling::Independent) => Some(unit_noise(&aux_rng, rows, cols, p, d)?),
                _ => None,
            };
            for (si, &snr) in cfg.snr_db.iter().enumerate() {
                let sigma2 = noise_variance(snr);
                let s = sigma2.sqrt();
                // reference term: the metric evaluated at the transmitted label
                let reference = match coupling {
                    None => s * s * w.fro_norm_sq(),
                    Some(NoiseCoupling::Shared) => dist_sq(&truth[p], &metric[p], &w, s),
                    Some(NoiseCoupling::Independent) => {
                        dist_sq(&truth[p], &metric[p], w_aux.as_ref().expect("drawn"), s)
                    }
                };
                for q in 0..size {
                    eta[q] = (reference - dist_sq(&truth[p], &metric[q], &w, s)) / sigma2;
                }
                sums[si] += log2_sum_exp(&eta);
            }
        }
    }
    let draws = (size * cfg.noise_draws) as f64;
    Ok(sums
        .iter()
        .map(|s| ((cfg.bits as f64 - s / draws) / cfg.t as f64).clamp(0.0, cfg.max_rate()))
        .collect())
}

fn reduce(per_trial: &[Vec<f64>], points: usize) -> Vec<Estimate> {
    (0..points)
        .map(|i| {
            let xs: Vec<f64> = per_trial.iter().map(|t| t[i]).collect();
            Estimate::from_samples(&xs)
        })
        .collect()
}

/// `I_Bob` at each SNR point with the coherent model `Y = H X E_1 + V`.
pub fn ami_bob(cfg: &AmiConfig) -> Result<Vec<Estimate>> {
    let cb = cfg.codebook()?;
    let root = RngStream::new(cfg.seed, 0);
    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|r| {
            let rng = root.derive(r as u64);
            let e1 = trial_basis(&rng, cfg.m, cfg.nb, cfg.t, cb.l(), &cfg.alice)?;
            let h = gaussian_complex_matrix(&mut rng.derive(TRIAL_BOB_CHANNEL), cfg.n_bob, cfg.m, 1.0)?;
            let truth = projected_all(&cb, &h, &e1)?;
            trial_rates(cfg, &truth, &truth, &rng, None)
        })
        .collect::<Result<_>>()?;
    Ok(reduce(&per_trial, cfg.snr_db.len()))
}

/// `I_Eve` at each SNR point; the attack runs once per trial.
pub fn ami_eve(cfg: &AmiConfig) -> Result<Vec<Estimate>> {
    let cb = cfg.codebook()?;
    cfg.attack.validate()?;
    let root = RngStream::new(cfg.seed, 0);
    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|r| {
            let rng = root.derive(r as u64);
            let trial = attack_trial(&rng, cfg.m, cfg.nb, cfg.t, &cb, &cfg.alice, &cfg.attack)?;
            let truth = projected_all(&cb, &trial.h, &trial.e1)?;
            let metric = projected_all(&cb, &trial.h, &trial.ehat)?;
            trial_rates(cfg, &truth, &metric, &rng, Some(cfg.coupling))
        })
        .collect::<Result<_>>()?;
    Ok(reduce(&per_trial, cfg.snr_db.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyReport {
    pub snr_db: f64,
    pub i_bob: f64,
    pub i_eve: f64,
    pub c: f64,
    pub stderr_bob: f64,
    pub stderr_eve: f64,
    pub trials: usize,
}

pub fn secrecy_sweep(cfg: &AmiConfig) -> Result<Vec<SecrecyReport>> {
    let bob = ami_bob(cfg)?;
    let eve = ami_eve(cfg)?;
    Ok(cfg
        .snr_db
        .iter()
        .zip(bob.iter().zip(&eve))
        .map(|(&snr_db, (b, e))| SecrecyReport {
            snr_db,
            i_bob: b.mean,
            i_eve: e.mean,
            c: secrecy_rate(b.mean, e.mean),
            stderr_bob: b.stderr,
            stderr_eve: e.stderr,
            trials: cfg.trials,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> AmiConfig {
        AmiConfig {
            m: 4,
            nb: 4,
            bits: 4,
            trials: 40,
            snr_db: vec![-40.0, 0.0, 60.0],
            alice: OptimizerOptions {
                restarts: 2,
                ..Default::default()
            },
            attack: AttackConfig {
                n_eve: 4,
                restarts: 4,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn bob_limits() {
        let out = ami_bob(&small()).unwrap();
        assert!(out[0].mean < 0.05, "{:?}", out[0]);
        assert!((out[2].mean - 4.0).abs() < 1e-6, "{:?}", out[2]);
        assert!(out.iter().all(|e| e.mean.is_finite() && (0.0..=4.0).contains(&e.mean)));
    }

    #[test]
    fn oracle_eve_matches_bob_with_same_antennas() {
        let mut cfg = small();
        cfg.n_bob = 4;
        cfg.attack.oracle = true;
        cfg.trials = 200;
        let bob = ami_bob(&cfg).unwrap();
        let eve = ami_eve(&cfg).unwrap();
        for (b, e) in bob.iter().zip(&eve) {
            let se = (b.stderr.powi(2) + e.stderr.powi(2)).sqrt();
            assert!((b.mean - e.mean).abs() <= 3.0 * se + 1e-9, "{b:?} {e:?}");
        }
    }

    #[test]
    fn budget_guard() {
        let cfg = AmiConfig {
            m: 256,
            nb: 256,
            bits: 11,
            ..small()
        };
        assert!(matches!(ami_bob(&cfg), Err(crate::Error::Infeasible(_))));
    }

    #[test]
    fn independent_coupling_runs() {
        let cfg = AmiConfig {
            coupling: NoiseCoupling::Independent,
            trials: 4,
            ..small()
        };
        let out = ami_eve(&cfg).unwrap();
        assert!(out.iter().all(|e| (0.0..=4.0).contains(&e.mean)));
    }
}
