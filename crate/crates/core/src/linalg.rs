//! Dense complex matrices and cyclic monomial operators.
//!
//! Every matrix symbol of the signal model (channels, codewords, projection
//! bases, received blocks) is a [`CMatrix`]. Codewords and differential states
//! are never materialized in the hot loops; they are [`Monomial`] operators
//! applied through index rotation and per-row phases.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{param, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Unit-modulus complex number `e^{j phi}`.
#[inline]
pub fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return param(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return param("ragged rows");
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Column vector from a slice.
    pub fn column_vector(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [C64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[C64]) {
        debug_assert_eq!(v.len(), self.rows);
        for (r, x) in v.iter().enumerate() {
            self[(r, c)] = *x;
        }
    }

    /// Columns `start..start + count` as a new matrix.
    pub fn columns(&self, start: usize, count: usize) -> Self {
        Self::from_fn(self.rows, count, |r, c| self[(r, start + c)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return param(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let lhs_row = self.row(r);
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, a) in lhs_row.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^H * rhs` without materializing the adjoint.
    pub fn adjoint_mul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.rows != rhs.rows {
            return param(format!(
                "cannot form A^H B with A {}x{} and B {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        let mut out = CMatrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for (i, a) in self.row(k).iter().enumerate() {
                let a = a.conj();
                if a == ZERO {
                    continue;
                }
                for (j, b) in rhs.row(k).iter().enumerate() {
                    out.data[i * rhs.cols + j] += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn add_assign(&mut self, rhs: &CMatrix) -> Result<()> {
        self.check_same_shape(rhs)?;
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    fn zip_with(&self, rhs: &CMatrix, f: impl Fn(C64, C64) -> C64) -> Result<CMatrix> {
        self.check_same_shape(rhs)?;
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    fn check_same_shape(&self, rhs: &CMatrix) -> Result<()> {
        if self.shape() != rhs.shape() {
            return param(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                rhs.shape()
            ));
        }
        Ok(())
    }

    /// Squared Frobenius norm.
    pub fn fro_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Largest elementwise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &CMatrix) -> f64 {
        assert_eq!(self.shape(), rhs.shape());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `|| A^H A - I ||_F`.
    pub fn unitarity_error(&self) -> f64 {
        let gram = self.adjoint_mul(self).expect("square gram");
        gram.sub(&CMatrix::identity(self.cols))
            .expect("same shape")
            .fro_norm_sq()
            .sqrt()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Squared Frobenius norm of a matrix.
pub fn fro_norm_sq(a: &CMatrix) -> f64 {
    a.fro_norm_sq()
}

/// Inner product `sum conj(a_k) b_k`.
#[inline]
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// A monomial matrix built from a cyclic shift: `(X v)[k] = phase[k] * v[(k - shift) mod M]`.
///
/// ADSM codewords `s M^m`, diagonal DUC codewords and all of their products
/// (the differential states) are of this form, so products and applications
/// cost O(M).
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    shift: usize,
    phases: Vec<C64>,
}

impl Monomial {
    pub fn identity(m: usize) -> Self {
        Self {
            shift: 0,
            phases: vec![ONE; m],
        }
    }

    pub fn new(shift: usize, phases: Vec<C64>) -> Result<Self> {
        if phases.is_empty() {
            return param("monomial dimension must be at least 1");
        }
        if shift >= phases.len() {
            return param(format!("shift {shift} out of range for dimension {}", phases.len()));
        }
        Ok(Self { shift, phases })
    }

    pub fn diagonal(phases: Vec<C64>) -> Self {
        Self { shift: 0, phases }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    #[inline]
    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn phases(&self) -> &[C64] {
        &self.phases
    }

    /// Row of the input feeding output row `k`.
    #[inline]
    pub fn source_row(&self, k: usize) -> usize {
        let m = self.dim();
        (k + m - self.shift) % m
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.dim());
        (0..self.dim())
            .map(|k| self.phases[k] * v[self.source_row(k)])
            .collect()
    }

    /// `X A` for an `M x T` matrix `A`, as a row rotation with phases.
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        debug_assert_eq!(a.rows(), self.dim());
        CMatrix::from_fn(a.rows(), a.cols(), |k, t| {
            self.phases[k] * a[(self.source_row(k), t)]
        })
    }

    /// `A X` for an `N x M` matrix `A`: column `j` of the result is
    /// `phase[k] * A[:, k]` with `k = (j + shift) mod M`.
    pub fn right_apply(&self, a: &CMatrix) -> CMatrix {
        debug_assert_eq!(a.cols(), self.dim());
        let m = self.dim();
        CMatrix::from_fn(a.rows(), m, |n, j| {
            let k = (j + self.shift) % m;
            a[(n, k)] * self.phases[k]
        })
    }

    /// Product `self * rhs`.
    pub fn compose(&self, rhs: &Monomial) -> Monomial {
        let m = self.dim();
        debug_assert_eq!(m, rhs.dim());
        let phases = (0..m)
            .map(|k| {
                let p = self.phases[k] * rhs.phases[self.source_row(k)];
                // keep unit modulus exact-ish over long products
                p / p.norm()
            })
            .collect();
        Monomial {
            shift: (self.shift + rhs.shift) % m,
            phases,
        }
    }

    /// Conjugate transpose, again a monomial.
    pub fn adjoint(&self) -> Monomial {
        let m = self.dim();
        let mut phases = vec![ZERO; m];
        for k in 0..m {
            phases[self.source_row(k)] = self.phases[k].conj();
        }
        Monomial {
            shift: (m - self.shift) % m,
            phases,
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        let m = self.dim();
        let mut out = CMatrix::zeros(m, m);
        for k in 0..m {
            out[(k, self.source_row(k))] = self.phases[k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn fro_norm_sq_examples() {
        assert_eq!(fro_norm_sq(&CMatrix::identity(3)), 3.0);
        assert_eq!(fro_norm_sq(&CMatrix::zeros(2, 2)), 0.0);
        let a = CMatrix::from_rows(&[vec![c(1.0, 1.0), ZERO], vec![ZERO, c(1.0, -1.0)]]).unwrap();
        assert_eq!(fro_norm_sq(&a), 4.0);
    }

    #[test]
    fn matmul_and_adjoint_agree() {
        let a = CMatrix::from_fn(3, 2, |r, k| c(r as f64, k as f64 + 1.0));
        let b = CMatrix::from_fn(3, 4, |r, k| c((r * k) as f64, -(r as f64)));
        let lhs = a.adjoint_mul(&b).unwrap();
        let rhs = a.adjoint().matmul(&b).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = CMatrix::zeros(2, 3);
        assert!(a.matmul(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn monomial_matches_dense_product() {
        let x = Monomial::new(1, vec![c(0.0, 1.0), ONE, cis(0.3)]).unwrap();
        let y = Monomial::new(2, vec![cis(1.0), cis(-2.0), ONE]).unwrap();
        let a = CMatrix::from_fn(3, 2, |r, k| c(r as f64 + 0.5, k as f64 - 1.0));
        let dense = x.to_matrix();
        assert!(x.apply(&a).max_abs_diff(&dense.matmul(&a).unwrap()) < 1e-14);
        let xy = x.compose(&y);
        let dense_xy = dense.matmul(&y.to_matrix()).unwrap();
        assert!(xy.to_matrix().max_abs_diff(&dense_xy) < 1e-14);
        let b = CMatrix::from_fn(2, 3, |r, k| c(k as f64, r as f64 + 2.0));
        assert!(x.right_apply(&b).max_abs_diff(&b.matmul(&dense).unwrap()) < 1e-14);
    }

    #[test]
    fn monomial_adjoint_is_inverse() {
        let x = Monomial::new(2, vec![c(0.0, 1.0), cis(0.7), ONE, cis(-1.2)]).unwrap();
        let dense = x.to_matrix().adjoint();
        assert!(x.adjoint().to_matrix().max_abs_diff(&dense) < 1e-15);
        let id = x.compose(&x.adjoint()).to_matrix();
        assert!(id.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
    }
}
