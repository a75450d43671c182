use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{AdsmCodebook, Codebook};
use crate::error::{param, Result};
use crate::projection::OptimizerOptions;
use crate::rng::{random_word, RngStream};
use crate::stats::Estimate;
use crate::transceiver::{apply_channel, Detector};

use super::attack::{attack_trial, AttackConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageConfig {
    pub m: usize,
    pub nb: usize,
    pub t: usize,
    /// PSK order of the ADSM codebook.
    pub l: usize,
    pub trials: usize,
    /// Data blocks Eve detects per trial; `None` is one frame's worth, `20M - M/T`.
    pub data_blocks: Option<usize>,
    pub seed: u64,
    pub alice: OptimizerOptions,
    pub attack: AttackConfig,
}

impl Default for LeakageConfig {
    fn default() -> Self {
        LeakageConfig {
            m: 16,
            nb: 16,
            t: 1,
            l: 4,
            trials: 200,
            data_blocks: None,
            seed: 0,
            alice: OptimizerOptions::default(),
            attack: AttackConfig::default(),
        }
    }
}

impl LeakageConfig {
    pub fn blocks_per_trial(&self) -> usize {
        self.data_blocks.unwrap_or(20 * self.m - self.m / self.t.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageResult {
    pub m: usize,
    pub n_eve: usize,
    pub trials: usize,
    pub bits: u64,
    pub ber_eve: f64,
    pub ber_stderr: f64,
    pub leakage: f64,
    /// Standard error of the leakage, `2 * ber_stderr`.
    pub stderr: f64,
}

/// `max(0, 1 - 2 BER)`.
pub fn leakage_from_ber(ber: f64) -> f64 {
    (1.0 - 2.0 * ber).clamp(0.0, 1.0)
}

const TRIAL_DATA: u64 = 4;

/// Eve's BER after the attack, one fresh key, channel and known block per trial.
pub fn leakage_probability(cfg: &LeakageConfig) -> Result<LeakageResult> {
    cfg.attack.validate()?;
    if cfg.trials == 0 {
        return param("at least one trial is required");
    }
    let cb = AdsmCodebook::new(cfg.m, cfg.l)?;
    let codebook = Codebook::Adsm(cb);
    let bits = cb.bits();
    let blocks = cfg.blocks_per_trial();
    if blocks == 0 {
        return param("at least one data block per trial is required");
    }
    let sigma2 = cfg.attack.noise_variance();
    let root = RngStream::new(cfg.seed, 0);

    let per_trial: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let rng = root.derive(r as u64);
            let trial = attack_trial(&rng, cfg.m, cfg.nb, cfg.t, &cb, &cfg.alice, &cfg.attack)?;
            let detector = Detector::new(&codebook, &trial.ehat)?;
            let mut data = rng.derive(TRIAL_DATA);
            let mut errors = 0u64;
            for _ in 0..blocks {
                let word = random_word(&mut data, bits);
                let tx = cb.word(word)?.apply(&trial.e1);
                let y = apply_channel(&trial.h, &tx, sigma2, &mut data)?;
                let got = detector.detect(&y, &trial.h)?;
                errors += (got ^ word).count_ones() as u64;
            }
            Ok(errors as f64 / (blocks as u64 * bits as u64) as f64)
        })
        .collect::<Result<_>>()?;

    let est = Estimate::from_samples(&per_trial);
    Ok(LeakageResult {
        m: cfg.m,
        n_eve: cfg.attack.n_eve,
        trials: cfg.trials,
        bits: cfg.trials as u64 * blocks as u64 * bits as u64,
        ber_eve: est.mean,
        ber_stderr: est.stderr,
        leakage: leakage_from_ber(est.mean),
        stderr: 2.0 * est.stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_endpoints() {
        assert_eq!(leakage_from_ber(0.5), 0.0);
        assert_eq!(leakage_from_ber(0.0), 1.0);
        assert_eq!(leakage_from_ber(0.7), 0.0);
    }

    #[test]
    fn two_antennas_leak() {
        let cfg = LeakageConfig {
            m: 2,
            nb: 2,
            trials: 20,
            attack: AttackConfig {
                n_eve: 2,
                restarts: 8,
                ..Default::default()
            },
            alice: OptimizerOptions {
                restarts: 4,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = leakage_probability(&cfg).unwrap();
        assert!(out.leakage > 0.9, "{out:?}");
        assert!((0.0..=1.0).contains(&out.leakage));
    }

    #[test]
    fn oracle_eve_reads_everything_when_noiseless() {
        let cfg = LeakageConfig {
            m: 8,
            nb: 8,
            trials: 4,
            attack: AttackConfig {
                oracle: true,
                ..Default::default()
            },
            alice: OptimizerOptions {
                restarts: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = leakage_probability(&cfg).unwrap();
        assert_eq!(out.ber_eve, 0.0);
        assert_eq!(out.leakage, 1.0);
    }
}
