//! Nonsquare differential space-time coding with a keyed projection basis.
//!
//! Modules, bottom-up:
//!
//! * [`linalg`], [`rng`]: complex matrices, implicit monomial operators and
//!   splittable seeded random streams.
//! * [`codebook`]: ADSM and DUC unitary data-matrix codebooks.
//! * [`projection`]: coding gain, the relaxed objective and its multi-start
//!   optimizer (the keyed one-way map), expansions, conventional DFT basis.
//! * [`transceiver`]: differential encoder, channel and noncoherent receiver.
//! * [`security`]: key-to-basis protocol, eavesdropper attack, leakage and
//!   mutual-information estimators.

pub mod codebook;
pub mod error;
pub mod linalg;
pub mod projection;
pub mod rng;
pub mod security;
pub mod stats;
pub mod transceiver;

pub use error::{Error, Result};
