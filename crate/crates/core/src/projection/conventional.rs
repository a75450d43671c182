//! Block-diagonal DFT basis of the conventional nonsquare scheme.

use std::f64::consts::PI;

use crate::error::{is_power_of_two, param, Error, Result};
use crate::linalg::{cis, CMatrix, C64};

/// Tolerance for the post-construction constraint checks.
pub const BASIS_TOLERANCE: f64 = 1e-10;

/// `M/T` projection matrices taken column-wise from `bdiag[W, ..., W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConventionalBasis {
    m: usize,
    nb: usize,
    t: usize,
    unitary: CMatrix,
    matrices: Vec<CMatrix>,
}

/// Normalized `n x n` DFT matrix with `omega = exp(-2 pi j / n)`.
pub fn dft_block(n: usize) -> CMatrix {
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |r, c| cis(-2.0 * PI * ((r * c) % n) as f64 / n as f64) * s)
}

pub fn conventional_basis(m: usize, nb: usize, t: usize) -> Result<ConventionalBasis> {
    if !is_power_of_two(m) || !is_power_of_two(nb) {
        return param(format!("M={m} and Nb={nb} must be powers of two"));
    }
    if nb > m || m % nb != 0 {
        return param(format!("Nb={nb} must divide M={m}"));
    }
    if t == 0 || m % t != 0 {
        return param(format!("T={t} must be a positive divisor of M={m}"));
    }
    let w = dft_block(nb);
    let mut unitary = CMatrix::zeros(m, m);
    for b in 0..m / nb {
        for r in 0..nb {
            for c in 0..nb {
                unitary[(b * nb + r, b * nb + c)] = w[(r, c)];
            }
        }
    }
    let matrices = (0..m / t).map(|i| unitary.columns(i * t, t)).collect();
    let basis = ConventionalBasis {
        m,
        nb,
        t,
        unitary,
        matrices,
    };
    let worst = basis
        .power_error()
        .max(basis.normality_error())
        .max(basis.orthogonality_error())
        .max(basis.reconstruction_error());
    if worst > BASIS_TOLERANCE {
        return Err(Error::Numerical(format!(
            "conventional basis violates its constraints by {worst:e}"
        )));
    }
    Ok(basis)
}

impl ConventionalBasis {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    /// The projection matrix used for data blocks.
    pub fn e1(&self) -> &CMatrix {
        &self.matrices[0]
    }

    /// Largest `| ||E_i||_F^2 - T |`.
    pub fn power_error(&self) -> f64 {
        self.matrices
            .iter()
            .map(|e| (e.fro_norm_sq() - self.t as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `||E_i^H E_i - I_T||_F`.
    pub fn normality_error(&self) -> f64 {
        self.matrices
            .iter()
            .map(|e| e.unitarity_error())
            .fold(0.0, f64::max)
    }

    /// Largest `||E_i^H E_k||_F` over `i != k`.
    pub fn orthogonality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.matrices.iter().enumerate() {
            for b in &self.matrices[i + 1..] {
                let g = a.adjoint_mul(b).expect("equal shapes");
                worst = worst.max(g.fro_norm_sq().sqrt());
            }
        }
        worst
    }

    /// `||sum_i E_i E_i^H - I_M||_F`.
    pub fn reconstruction_error(&self) -> f64 {
        let mut acc = CMatrix::zeros(self.m, self.m);
        for e in &self.matrices {
            acc.add_assign(&e.matmul(&e.adjoint()).expect("square product"))
                .expect("equal shapes");
        }
        acc.sub(&CMatrix::identity(self.m))
            .expect("equal shapes")
            .fro_norm_sq()
            .sqrt()
    }

    /// First column of `E_1`, the conventional projection vector.
    pub fn vector(&self) -> Vec<C64> {
        self.e1().column(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_antenna_block_is_the_dft() {
        let b = conventional_basis(2, 2, 2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let w = CMatrix::from_rows(&[
            vec![C64::new(s, 0.0), C64::new(s, 0.0)],
            vec![C64::new(s, 0.0), C64::new(-s, 0.0)],
        ])
        .unwrap();
        assert!(b.e1().max_abs_diff(&w) < 1e-15);
        assert_eq!(b.matrices().len(), 1);
    }

    #[test]
    fn reconstructible_and_orthogonal() {
        let b = conventional_basis(4, 2, 2).unwrap();
        assert!(b.reconstruction_error() < 1e-12);
        let b = conventional_basis(8, 4, 2).unwrap();
        let cross = b.matrices()[0].adjoint_mul(&b.matrices()[1]).unwrap();
        assert!(cross.fro_norm_sq().sqrt() < 1e-12);
    }

    #[test]
    fn all_small_combinations_satisfy_constraints() {
        for m in [2usize, 4, 8, 16] {
            for nb in [1usize, 2, 4, 8, 16].into_iter().filter(|nb| *nb <= m) {
                for t in [1usize, 2, 4, 8, 16].into_iter().filter(|t| *t <= m) {
                    let b = conventional_basis(m, nb, t).unwrap();
                    assert!(b.power_error() < 1e-10);
                    assert!(b.normality_error() < 1e-10);
                    assert!(b.orthogonality_error() < 1e-10);
                    assert!(b.reconstruction_error() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(conventional_basis(4, 8, 1).is_err());
        assert!(conventional_basis(6, 2, 1).is_err());
        assert!(conventional_basis(8, 2, 3).is_err());
    }
}
