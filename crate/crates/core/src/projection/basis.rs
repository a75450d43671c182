use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{is_power_of_two, param, Result};
use crate::linalg::{cis, CMatrix, C64, ZERO};

/// Phase parameterization of a unit-modulus projection vector.
///
/// Stored in the gauge `theta[0] = 0` with every angle reduced to `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleVector {
    theta: Vec<f64>,
}

fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl AngleVector {
    /// Normalizes to the gauge: subtracts `theta[0]` from every angle, then wraps.
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return param("angle vector must be non-empty");
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return param("angles must be finite");
        }
        let t0 = theta[0];
        Ok(Self {
            theta: theta.into_iter().map(|x| wrap_angle(x - t0)).collect(),
        })
    }

    /// Builds the gauge-fixed vector from the free angles `theta[1..]`.
    pub fn from_free(free: &[f64]) -> Result<Self> {
        let mut theta = Vec::with_capacity(free.len() + 1);
        theta.push(0.0);
        theta.extend_from_slice(free);
        Self::new(theta)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }
}

/// Unit-norm vector with `nb` nonzero entries of modulus `1/sqrt(nb)` at
/// positions `k * M / nb`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionVector {
    nb: usize,
    values: Vec<C64>,
}

impl ProjectionVector {
    /// Validates the support and modulus invariants.
    pub fn from_values(values: Vec<C64>, nb: usize) -> Result<Self> {
        let m = values.len();
        if nb == 0 || m == 0 || m % nb != 0 {
            return param(format!("Nb={nb} must divide M={m}"));
        }
        let beta = m / nb;
        let amp = 1.0 / (nb as f64).sqrt();
        for (k, v) in values.iter().enumerate() {
            let on_support = k % beta == 0;
            let ok = if on_support {
                (v.norm() - amp).abs() < 1e-9
            } else {
                v.norm() < 1e-12
            };
            if !ok {
                return param(format!(
                    "entry {k} = {v} breaks the sparse unit-modulus pattern for (M={m}, Nb={nb})"
                ));
            }
        }
        Ok(Self { nb, values })
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Spacing `M / Nb` between nonzero entries.
    pub fn spacing(&self) -> usize {
        self.m() / self.nb
    }

    /// Angles of the nonzero entries, in support order.
    pub fn angles(&self) -> AngleVector {
        let beta = self.spacing();
        let theta = (0..self.nb).map(|k| self.values[k * beta].arg()).collect();
        AngleVector::new(theta).expect("finite angles")
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `e (x) [1 0]^T`: doubles the length by interleaving zeros.
    pub fn expand_sparse(&self) -> ProjectionVector {
        let values = self.values.iter().flat_map(|&v| [v, ZERO]).collect();
        ProjectionVector {
            nb: self.nb,
            values,
        }
    }

    /// Repeated sparse expansion up to length `m`.
    pub fn expand_to(&self, m: usize) -> Result<ProjectionVector> {
        if m < self.m() || m % self.m() != 0 || !is_power_of_two(m / self.m()) {
            return param(format!(
                "cannot expand a length-{} vector to length {m}",
                self.m()
            ));
        }
        let mut v = self.clone();
        while v.m() < m {
            v = v.expand_sparse();
        }
        Ok(v)
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::column_vector(&self.values)
    }

    /// Multiplies by a global phase; the support pattern is unchanged.
    pub fn rotated(&self, phase: f64) -> ProjectionVector {
        let p = cis(phase);
        ProjectionVector {
            nb: self.nb,
            values: self.values.iter().map(|v| v * p).collect(),
        }
    }
}

/// Dense projection vector `e^{j theta_m} / sqrt(M)`.
pub fn angles_to_vector(theta: &AngleVector) -> ProjectionVector {
    let m = theta.len();
    let amp = 1.0 / (m as f64).sqrt();
    ProjectionVector {
        nb: m,
        values: theta.as_slice().iter().map(|&t| cis(t) * amp).collect(),
    }
}

/// Sparse projection vector `e1(M, Nb)` from the `Nb` angles of `e1(Nb, Nb)`.
pub fn sparse_vector(theta: &AngleVector, m: usize) -> Result<ProjectionVector> {
    angles_to_vector(theta).expand_to(m)
}

/// Cyclic downward rotation: `(P^t v)[k] = v[(k - t) mod M]`.
pub fn rotate_down(v: &[C64], t: usize) -> Vec<C64> {
    let m = v.len();
    (0..m).map(|k| v[(k + m - t % m) % m]).collect()
}

/// `[e1 | P e1 | ... | P^{T-1} e1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    base: ProjectionVector,
    matrix: CMatrix,
}

impl ProjectionMatrix {
    pub fn m(&self) -> usize {
        self.base.m()
    }

    pub fn nb(&self) -> usize {
        self.base.nb()
    }

    pub fn t(&self) -> usize {
        self.matrix.cols()
    }

    pub fn base(&self) -> &ProjectionVector {
        &self.base
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `|| E^H E - I_T ||_F`; exactly zero when `T <= M / Nb`.
    pub fn normality_error(&self) -> f64 {
        self.matrix.unitarity_error()
    }
}

pub fn expand_time(e1: &ProjectionVector, t: usize) -> Result<ProjectionMatrix> {
    let m = e1.m();
    if t == 0 || m % t != 0 {
        return param(format!("T={t} must be a positive divisor of M={m}"));
    }
    let mut matrix = CMatrix::zeros(m, t);
    for col in 0..t {
        matrix.set_column(col, &rotate_down(e1.values(), col));
    }
    Ok(ProjectionMatrix {
        base: e1.clone(),
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn angles_example_two_antennas() {
        let e = angles_to_vector(&AngleVector::new(vec![0.0, PI / 4.0]).unwrap());
        let s = 1.0 / 2f64.sqrt();
        assert!((e.values()[0] - c(s, 0.0)).norm() < 1e-15);
        assert!((e.values()[1] - cis(PI / 4.0) * s).norm() < 1e-15);

        let one = angles_to_vector(&AngleVector::new(vec![0.0]).unwrap());
        assert_eq!(one.values(), &[c(1.0, 0.0)]);
    }

    #[test]
    fn gauge_and_wrapping() {
        let a = AngleVector::new(vec![1.0, 0.5, 1.0 + 7.0]).unwrap();
        assert_eq!(a.as_slice()[0], 0.0);
        assert!((a.as_slice()[1] - (TAU - 0.5)).abs() < 1e-12);
        assert!((a.as_slice()[2] - (7.0 - TAU)).abs() < 1e-12);
        assert!(AngleVector::new(vec![]).is_err());
        assert!(AngleVector::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn sparse_expansion_example() {
        let e2 = angles_to_vector(&AngleVector::new(vec![0.0, PI / 4.0]).unwrap());
        let e4 = e2.expand_sparse();
        let s = 1.0 / 2f64.sqrt();
        let expected = [c(s, 0.0), ZERO, cis(PI / 4.0) * s, ZERO];
        for (a, b) in e4.values().iter().zip(&expected) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(e4.nb(), 2);
        assert!((e4.norm() - 1.0).abs() < 1e-15);
        assert!(ProjectionVector::from_values(e4.values().to_vec(), 2).is_ok());
    }

    #[test]
    fn rotation_example() {
        let v: Vec<C64> = (1..=4).map(|x| c(x as f64, 0.0)).collect();
        let pv: Vec<f64> = rotate_down(&v, 1).iter().map(|x| x.re).collect();
        assert_eq!(pv, vec![4.0, 1.0, 2.0, 3.0]);
        let p2v: Vec<f64> = rotate_down(&v, 2).iter().map(|x| x.re).collect();
        assert_eq!(p2v, vec![3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn time_expansion_example() {
        let e2 = angles_to_vector(&AngleVector::new(vec![0.0, PI / 4.0]).unwrap());
        let big = expand_time(&e2.expand_sparse(), 2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let w = cis(PI / 4.0) * s;
        let expected = CMatrix::from_rows(&[
            vec![c(s, 0.0), ZERO],
            vec![ZERO, c(s, 0.0)],
            vec![w, ZERO],
            vec![ZERO, w],
        ])
        .unwrap();
        assert!(big.matrix().max_abs_diff(&expected) < 1e-15);
        assert!((big.matrix().fro_norm_sq() - 2.0).abs() < 1e-14);
        assert!(expand_time(&e2, 3).is_err());
        assert!(expand_time(&e2, 0).is_err());
    }

    #[test]
    fn disjoint_support_columns_are_orthonormal() {
        let theta = AngleVector::new(vec![0.0, 1.3]).unwrap();
        let e = sparse_vector(&theta, 8).unwrap();
        let big = expand_time(&e, 4).unwrap();
        // off-diagonal Gram entries are exact zeros; the diagonal carries rounding only
        assert!(big.normality_error() < 1e-15);
    }

    #[test]
    fn from_values_rejects_bad_pattern() {
        let s = 1.0 / 2f64.sqrt();
        assert!(ProjectionVector::from_values(vec![c(s, 0.0), c(s, 0.0), ZERO, ZERO], 2).is_err());
        assert!(ProjectionVector::from_values(vec![c(1.0, 0.0), ZERO, ZERO], 2).is_err());
    }
}
