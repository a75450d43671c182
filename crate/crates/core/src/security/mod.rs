//! Keyed basis protocol, idealized eavesdropper and secrecy metrics.

pub mod ami;
pub mod attack;
pub mod leakage;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::projection::{expand_time, optimize_projection, OptimizerOptions, ProjectionMatrix};
use crate::rng::RngStream;

pub use ami::{ami_bob, ami_eve, secrecy_sweep, AmiConfig, NoiseCoupling, SecrecyReport};
pub use attack::{
    eve_detect, eve_estimate_basis, eve_prior, AttackConfig, AttackObjective, AttackOutcome,
    EvePrior,
};
pub use leakage::{leakage_from_ber, leakage_probability, LeakageConfig, LeakageResult};

/// Stream of the key-seeded generator that drives the basis optimization.
const KEY_STREAM: u64 = 0x6b65_795f_6261_7369;

/// Secret integer shared by transmitter and legitimate receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecretSeed(pub u64);

impl SecretSeed {
    pub fn stream(&self) -> RngStream {
        RngStream::new(self.0, KEY_STREAM)
    }
}

/// Key to projection matrix: optimize at size `nb` from key-seeded starts,
/// expand sparsely to `m`, then over `t` time slots.
pub fn derive_basis_from_key(
    key: SecretSeed,
    m: usize,
    nb: usize,
    t: usize,
    l: usize,
    opts: &OptimizerOptions,
) -> Result<ProjectionMatrix> {
    let opt = optimize_projection(nb, l, &key.stream(), opts)?;
    expand_time(&opt.vector.expand_to(m)?, t)
}

/// `max(0, I_Bob - I_Eve)`.
pub fn secrecy_rate(i_bob: f64, i_eve: f64) -> f64 {
    (i_bob - i_eve).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::objective_f;

    fn quick() -> OptimizerOptions {
        OptimizerOptions {
            restarts: 4,
            ..Default::default()
        }
    }

    #[test]
    fn same_key_same_basis() {
        let a = derive_basis_from_key(SecretSeed(77), 16, 16, 1, 4, &quick()).unwrap();
        let b = derive_basis_from_key(SecretSeed(77), 16, 16, 1, 4, &quick()).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn two_antenna_keys_all_reach_zero() {
        for z in 0..10 {
            let e = derive_basis_from_key(SecretSeed(z), 2, 2, 1, 4, &quick()).unwrap();
            assert!(objective_f(e.base().values(), 4) < 1e-9);
        }
    }

    #[test]
    fn sparse_keyed_basis_shape() {
        let e = derive_basis_from_key(SecretSeed(3), 16, 4, 2, 4, &quick()).unwrap();
        assert_eq!(e.matrix().shape(), (16, 2));
        assert_eq!(e.nb(), 4);
        assert!((e.matrix().fro_norm_sq() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn secrecy_rate_examples() {
        assert!((secrecy_rate(6.0, 0.2) - 5.8).abs() < 1e-15);
        assert_eq!(secrecy_rate(1.0, 3.0), 0.0);
        assert_eq!(secrecy_rate(2.5, 2.5), 0.0);
    }
}
