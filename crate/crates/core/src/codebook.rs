//! Unitary data-matrix codebooks.
//!
//! * ADSM: `X = s M^m`, where `M` is the cyclic down-shift whose wrapped entry
//!   carries the corner phase `e^{j 2 pi / L}` and `s` is an L-PSK symbol.
//! * DUC: `X = diag(exp(j 2 pi b u_m / 2^B))` with integer factors `u`.
//!
//! Codewords are [`Monomial`] operators indexed by their `B`-bit label.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{is_power_of_two, param, Error, Result};
use crate::linalg::{cis, Monomial, C64, ONE};

/// Default cap on the number of DUC factor tuples enumerated.
pub const DEFAULT_DUC_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdsmCodebook {
    m: usize,
    l: usize,
}

impl AdsmCodebook {
    pub fn new(m: usize, l: usize) -> Result<Self> {
        if !is_power_of_two(m) {
            return param(format!("ADSM needs M to be a power of two, got {m}"));
        }
        if !is_power_of_two(l) || l < 2 {
            return param(format!("ADSM needs L to be a power of two >= 2, got {l}"));
        }
        Ok(Self { m, l })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Bits selecting the dispersion matrix.
    pub fn b1(&self) -> u32 {
        self.m.trailing_zeros()
    }

    /// Bits selecting the PSK symbol.
    pub fn b2(&self) -> u32 {
        self.l.trailing_zeros()
    }

    pub fn bits(&self) -> u32 {
        self.b1() + self.b2()
    }

    pub fn size(&self) -> usize {
        self.m * self.l
    }

    /// Corner phase `e^{j 2 pi / L}`.
    pub fn corner(&self) -> C64 {
        cis(2.0 * PI / self.l as f64)
    }

    pub fn psk(&self, s_index: usize) -> C64 {
        cis(2.0 * PI * s_index as f64 / self.l as f64)
    }

    /// `s M^m` with `s = e^{j 2 pi s_index / L}`.
    pub fn codeword(&self, m: usize, s_index: usize) -> Result<Monomial> {
        if m >= self.m || s_index >= self.l {
            return param(format!(
                "ADSM indices (m={m}, s={s_index}) out of range for M={}, L={}",
                self.m, self.l
            ));
        }
        let s = self.psk(s_index);
        let sc = s * self.corner();
        let phases = (0..self.m).map(|k| if k < m { sc } else { s }).collect();
        Monomial::new(m, phases)
    }

    /// Big-endian split: the leading `B1` bits pick `m`, the trailing `B2` bits pick `s`.
    pub fn bits_to_indices(&self, bits: u64) -> Result<(usize, usize)> {
        if bits >= self.size() as u64 {
            return param(format!("bit word {bits} needs more than {} bits", self.bits()));
        }
        let b2 = self.b2();
        Ok(((bits >> b2) as usize, (bits & ((1 << b2) - 1)) as usize))
    }

    pub fn indices_to_bits(&self, m: usize, s_index: usize) -> u64 {
        ((m as u64) << self.b2()) | s_index as u64
    }

    pub fn word(&self, bits: u64) -> Result<Monomial> {
        let (m, s) = self.bits_to_indices(bits)?;
        self.codeword(m, s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DucCodebook {
    bits: u32,
    u: Vec<u64>,
}

impl DucCodebook {
    pub fn new(bits: u32, u: Vec<u64>) -> Result<Self> {
        if u.is_empty() {
            return param("DUC needs at least one factor");
        }
        if bits == 0 || bits > 20 {
            return param(format!("DUC bits must be in 1..=20, got {bits}"));
        }
        let half = 1u64 << (bits - 1);
        if u.iter().any(|&x| x == 0 || x > half) {
            return param(format!("DUC factors must lie in 1..={half}"));
        }
        if u.windows(2).any(|w| w[0] > w[1]) {
            return param("DUC factors must be non-decreasing");
        }
        Ok(Self { bits, u })
    }

    pub fn m(&self) -> usize {
        self.u.len()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn factors(&self) -> &[u64] {
        &self.u
    }

    pub fn size(&self) -> usize {
        1 << self.bits
    }

    pub fn codeword(&self, b: u64) -> Result<Monomial> {
        if b >= self.size() as u64 {
            return param(format!("DUC label {b} out of range for B={}", self.bits));
        }
        let q = self.size() as u64;
        let phases = self
            .u
            .iter()
            .map(|&u| cis(2.0 * PI * ((b * u) % q) as f64 / q as f64))
            .collect();
        Ok(Monomial::diagonal(phases))
    }

    /// Diversity product of these factors.
    pub fn diversity_product(&self) -> f64 {
        diversity_product(&self.u, self.bits)
    }
}

/// `min_b |prod_m sin(pi b u_m / 2^B)|^{1/M}` over `b = 1..2^B - 1`.
pub fn diversity_product(u: &[u64], bits: u32) -> f64 {
    let q = 1u64 << bits;
    let table = sin_table(bits);
    let worst = (1..q)
        .map(|b| u.iter().map(|&x| table[((b * x) % q) as usize]).product::<f64>())
        .fold(f64::INFINITY, f64::min);
    worst.powf(1.0 / u.len() as f64)
}

fn sin_table(bits: u32) -> Vec<f64> {
    let q = 1u64 << bits;
    (0..q).map(|k| (PI * k as f64 / q as f64).sin().abs()).collect()
}

/// `C(n, k)` as a float (exact while it fits in 53 bits).
pub fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of non-decreasing factor tuples for `(M, B)`.
pub fn duc_search_space(m: usize, bits: u32) -> f64 {
    binomial((1u64 << (bits - 1)) + m as u64 - 1, m as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DucDesign {
    pub codebook: DucCodebook,
    pub p_max: f64,
}

/// Exhaustive search for the DUC factors maximizing the diversity product.
///
/// Tuples are enumerated in lexicographic order and a later tuple replaces the
/// incumbent only if strictly better, so ties resolve to the smallest tuple.
pub fn duc_optimize_factors(m: usize, bits: u32, budget: f64) -> Result<DucDesign> {
    if m == 0 {
        return param("DUC needs M >= 1");
    }
    if bits == 0 || bits > 20 {
        return param(format!("DUC bits must be in 1..=20, got {bits}"));
    }
    let space = duc_search_space(m, bits);
    if space > budget {
        return Err(Error::Infeasible(format!(
            "DUC factor search for M={m}, B={bits} has {space:.3e} candidates (budget {budget:.3e})"
        )));
    }
    let q = 1u64 << bits;
    let half = q / 2;
    let table = sin_table(bits);
    let tie = 1e-12;

    let mut u = vec![1u64; m];
    let mut best_u = u.clone();
    let mut best = -1.0f64;
    loop {
        // min over b of the product, abandoned as soon as it cannot beat the incumbent
        let mut worst = f64::INFINITY;
        for b in 1..q {
            let p: f64 = u.iter().map(|&x| table[((b * x) % q) as usize]).product();
            worst = worst.min(p);
            if worst <= best + tie {
                break;
            }
        }
        if worst > best + tie {
            best = worst;
            best_u.copy_from_slice(&u);
        }
        // next non-decreasing tuple
        let Some(pos) = (0..m).rev().find(|&i| u[i] < half) else {
            break;
        };
        let v = u[pos] + 1;
        for x in &mut u[pos..] {
            *x = v;
        }
    }
    let p_max = best.max(0.0).powf(1.0 / m as f64);
    Ok(DucDesign {
        codebook: DucCodebook::new(bits, best_u)?,
        p_max,
    })
}

/// DUC codebook of dimension `m` whose factors are optimized over the first
/// `used` antennas only; the rest repeat the largest factor.
pub fn duc_codebook_padded(m: usize, used: usize, bits: u32, budget: f64) -> Result<DucDesign> {
    if used == 0 || used > m {
        return param(format!("utilized antenna count {used} must lie in 1..={m}"));
    }
    let design = duc_optimize_factors(used, bits, budget)?;
    let mut u = design.codebook.factors().to_vec();
    let last = *u.last().expect("nonempty");
    u.resize(m, last);
    Ok(DucDesign {
        codebook: DucCodebook::new(bits, u)?,
        p_max: design.p_max,
    })
}

/// A codebook of `2^B` unitary monomial codewords addressed by bit label.
#[derive(Debug, Clone, PartialEq)]
pub enum Codebook {
    Adsm(AdsmCodebook),
    Duc(DucCodebook),
}

impl Codebook {
    pub fn dim(&self) -> usize {
        match self {
            Codebook::Adsm(cb) => cb.m(),
            Codebook::Duc(cb) => cb.m(),
        }
    }

    pub fn bits(&self) -> u32 {
        match self {
            Codebook::Adsm(cb) => cb.bits(),
            Codebook::Duc(cb) => cb.bits(),
        }
    }

    pub fn size(&self) -> usize {
        1 << self.bits()
    }

    pub fn codeword(&self, label: u64) -> Result<Monomial> {
        match self {
            Codebook::Adsm(cb) => cb.word(label),
            Codebook::Duc(cb) => cb.codeword(label),
        }
    }

    /// All codewords in label order.
    pub fn codewords(&self) -> Vec<Monomial> {
        (0..self.size() as u64)
            .map(|b| self.codeword(b).expect("label in range"))
            .collect()
    }

    pub fn identity(&self) -> Monomial {
        Monomial::diagonal(vec![ONE; self.dim()])
    }
}
