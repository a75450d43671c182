//! Coding gain of projected ADSM codewords and its O(M^2) relaxation.
//!
//! Everything here is built on the constacyclic autocorrelation
//! `e^H M^n e`, evaluated in O(M) by index arithmetic.

use std::f64::consts::PI;

use crate::codebook::{AdsmCodebook, Codebook};
use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, C64, ZERO};

use super::basis::AngleVector;

/// Default cap on the codebook size for pairwise enumeration.
pub const DEFAULT_PAIRWISE_BITS: u32 = 10;

/// Terms with modulus below this contribute a zero subgradient.
pub const SUBGRADIENT_FLOOR: f64 = 1e-12;

/// Corner phase `e^{j 2 pi / L}` of the ADSM generator.
pub fn corner_phase(l: usize) -> C64 {
    cis(2.0 * PI / l as f64)
}

/// `e^H M^n e` where `(M^n e)[k] = e[k - n]` for `k >= n` and
/// `corner * e[k - n + M]` otherwise.
pub fn shifted_inner(e: &[C64], n: usize, corner: C64) -> C64 {
    let m = e.len();
    let mut head = ZERO;
    for k in 0..n.min(m) {
        head += e[k].conj() * e[k + m - n];
    }
    let mut tail = ZERO;
    for k in n..m {
        tail += e[k].conj() * e[k - n];
    }
    tail + corner * head
}

/// `f(e) = sum_{n=1}^{M/2} |e^H M^n e|`.
pub fn objective_f(e: &[C64], l: usize) -> f64 {
    let corner = corner_phase(l);
    (1..=e.len() / 2).map(|n| shifted_inner(e, n, corner).norm()).sum()
}

/// Objective and gradient with respect to the angles of a dense vector
/// `e^{j theta} / sqrt(M)`. The gauge component `grad[0]` is zeroed.
pub fn objective_and_gradient(theta: &[f64], corner: C64) -> (f64, Vec<f64>) {
    let m = theta.len();
    let amp = 1.0 / (m as f64).sqrt();
    let e: Vec<C64> = theta.iter().map(|&t| cis(t) * amp).collect();
    let mut grad = vec![0.0; m];
    let mut f = 0.0;
    let mut terms = vec![ZERO; m];
    for n in 1..=m / 2 {
        // term k pairs conj(e_k) with e_{(k - n) mod M}
        for k in 0..m {
            terms[k] = if k >= n {
                e[k].conj() * e[k - n]
            } else {
                corner * e[k].conj() * e[k + m - n]
            };
        }
        let z: C64 = terms.iter().sum();
        let a = z.norm();
        f += a;
        if a < SUBGRADIENT_FLOOR {
            continue;
        }
        for (k, t) in terms.iter().enumerate() {
            let w = (z.conj() * t).im / a;
            grad[(k + m - n) % m] -= w;
            grad[k] += w;
        }
    }
    grad[0] = 0.0;
    (f, grad)
}

/// Analytic (sub)gradient of `f` with respect to the angles.
pub fn objective_gradient(theta: &AngleVector, l: usize) -> Vec<f64> {
    objective_and_gradient(theta.as_slice(), corner_phase(l)).1
}

/// Objective value for a dense angle vector without the gradient.
pub fn objective_of_angles(theta: &[f64], corner: C64) -> f64 {
    let m = theta.len();
    let amp = 1.0 / (m as f64).sqrt();
    let e: Vec<C64> = theta.iter().map(|&t| cis(t) * amp).collect();
    (1..=m / 2).map(|n| shifted_inner(&e, n, corner).norm()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingGain {
    /// PSK-pair term, independent of the projection.
    pub g1: f64,
    /// Dispersion-pair term.
    pub g2: f64,
    pub gain: f64,
}

/// `min_{s1 != s2} |s1 - s2|^{2/N}` for L-PSK.
pub fn psk_gain(l: usize, n_rx: usize) -> f64 {
    let pts: Vec<C64> = (0..l).map(|i| cis(2.0 * PI * i as f64 / l as f64)).collect();
    let mut best = f64::INFINITY;
    for i in 0..l {
        for j in 0..l {
            if i != j {
                best = best.min((pts[i] - pts[j]).norm_sqr());
            }
        }
    }
    best.powf(1.0 / n_rx as f64)
}

/// Closed-form ADSM coding gain `min(g1, g2)`, cost O(M^2 L).
pub fn coding_gain_closed(e: &[C64], l: usize, n_rx: usize) -> CodingGain {
    let corner = corner_phase(l);
    let g1 = psk_gain(l, n_rx);
    let mut worst = f64::INFINITY;
    for n in 1..=e.len() / 2 {
        let z = shifted_inner(e, n, corner);
        for si in 0..l {
            let s = cis(2.0 * PI * si as f64 / l as f64);
            worst = worst.min(2.0 * (1.0 - (s * z).re));
        }
    }
    let g2 = worst.max(0.0).powf(1.0 / n_rx as f64);
    CodingGain {
        g1,
        g2,
        gain: g1.min(g2),
    }
}

fn check_pairwise_budget(bits: u32, budget_bits: u32) -> Result<()> {
    if bits > budget_bits {
        return Err(Error::Infeasible(format!(
            "pairwise coding gain over 2^{bits} codewords exceeds the 2^{budget_bits} budget; \
             use the closed form instead"
        )));
    }
    Ok(())
}

/// Pairwise minimum `(||X_p e - X_q e||^2)^{1/N}` over the ADSM codebook.
pub fn coding_gain_bruteforce(
    e: &[C64],
    cb: &AdsmCodebook,
    n_rx: usize,
    budget_bits: u32,
) -> Result<f64> {
    check_pairwise_budget(cb.bits(), budget_bits)?;
    if e.len() != cb.m() {
        return crate::error::param("projection length must match the codebook dimension");
    }
    let projected: Vec<Vec<C64>> = Codebook::Adsm(*cb)
        .codewords()
        .iter()
        .map(|x| x.apply_vec(e))
        .collect();
    let mut best = f64::INFINITY;
    for p in 0..projected.len() {
        for q in p + 1..projected.len() {
            let d: f64 = projected[p]
                .iter()
                .zip(&projected[q])
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            best = best.min(d);
        }
    }
    Ok(best.powf(1.0 / n_rx as f64))
}

/// Coding gain of a projection matrix over any codebook:
/// `min_{p != q} (||(X_p - X_q) E||_F^2 / T)^{1/N}`. Equals the vector
/// definition when `T = 1`.
pub fn coding_gain_matrix(
    e: &CMatrix,
    cb: &Codebook,
    n_rx: usize,
    budget_bits: u32,
) -> Result<f64> {
    check_pairwise_budget(cb.bits(), budget_bits)?;
    if e.rows() != cb.dim() {
        return crate::error::param("projection rows must match the codebook dimension");
    }
    let t = e.cols() as f64;
    let projected: Vec<CMatrix> = cb.codewords().iter().map(|x| x.apply(e)).collect();
    let mut best = f64::INFINITY;
    for p in 0..projected.len() {
        for q in p + 1..projected.len() {
            let d: f64 = projected[p]
                .as_slice()
                .iter()
                .zip(projected[q].as_slice())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            best = best.min(d / t);
        }
    }
    Ok(best.powf(1.0 / n_rx as f64))
}
