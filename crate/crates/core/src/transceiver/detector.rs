//! Exhaustive ML search `argmin_X ||Y - G X E||_F^2` over a codebook.
//!
//! The same search serves the noncoherent receiver (`G` = running estimate)
//! and coherent detection (`G` = channel). Every `X E` is precomputed once as a
//! sparse list of entries, so scoring a candidate costs O(N * nnz(X E)).

use crate::codebook::Codebook;
use crate::error::{param, Result};
use crate::linalg::{CMatrix, C64, ZERO};

#[derive(Debug, Clone)]
struct Sparse {
    /// `(row, col, value)` of the nonzero entries.
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn from_matrix(a: &CMatrix) -> Sparse {
        let mut entries = Vec::new();
        for r in 0..a.rows() {
            for (c, &v) in a.row(r).iter().enumerate() {
                if v != ZERO {
                    entries.push((r, c, v));
                }
            }
        }
        Sparse { entries }
    }

    /// `(sum conj(Y) .* (G P), ||G P||_F^2)`.
    fn correlate(&self, y: &CMatrix, g: &CMatrix, buf: &mut [C64]) -> (C64, f64) {
        let mut rho = ZERO;
        let mut energy = 0.0;
        for n in 0..g.rows() {
            buf.iter_mut().for_each(|z| *z = ZERO);
            let gr = g.row(n);
            for &(k, t, v) in &self.entries {
                buf[t] += gr[k] * v;
            }
            for (t, z) in buf.iter().enumerate() {
                rho += y[(n, t)].conj() * z;
                energy += z.norm_sqr();
            }
        }
        (rho, energy)
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// ADSM: `X = s M^m`, so the PSK symbol factors out of `G X E`.
    Adsm {
        b2: u32,
        psk: Vec<C64>,
        base: Vec<Sparse>,
    },
    Generic {
        projected: Vec<Sparse>,
    },
}

#[derive(Debug, Clone)]
pub struct Detector {
    m: usize,
    t: usize,
    kind: Kind,
}

impl Detector {
    pub fn new(cb: &Codebook, e: &CMatrix) -> Result<Detector> {
        let m = cb.dim();
        if e.rows() != m {
            return param(format!(
                "projection has {} rows but codewords are {m} x {m}",
                e.rows()
            ));
        }
        let kind = match cb {
            Codebook::Adsm(a) => Kind::Adsm {
                b2: a.b2(),
                psk: (0..a.l()).map(|s| a.psk(s)).collect(),
                base: (0..m)
                    .map(|mi| Ok(Sparse::from_matrix(&a.codeword(mi, 0)?.apply(e))))
                    .collect::<Result<_>>()?,
            },
            Codebook::Duc(_) => Kind::Generic {
                projected: cb
                    .codewords()
                    .iter()
                    .map(|x| Sparse::from_matrix(&x.apply(e)))
                    .collect(),
            },
        };
        Ok(Detector {
            m,
            t: e.cols(),
            kind,
        })
    }

    /// Label of the best candidate; ties go to the lowest label.
    pub fn detect(&self, y: &CMatrix, g: &CMatrix) -> Result<u64> {
        if g.cols() != self.m || y.rows() != g.rows() || y.cols() != self.t {
            return param(format!(
                "detector expects Y of {} x {} and G of {} x {}, got {:?} and {:?}",
                g.rows(),
                self.t,
                y.rows(),
                self.m,
                y.shape(),
                g.shape()
            ));
        }
        let mut buf = vec![ZERO; self.t];
        let mut best = (f64::INFINITY, 0u64);
        match &self.kind {
            Kind::Adsm { b2, psk, base } => {
                for (mi, p) in base.iter().enumerate() {
                    let (rho, energy) = p.correlate(y, g, &mut buf);
                    for (si, s) in psk.iter().enumerate() {
                        let score = energy - 2.0 * (s * rho).re;
                        if score < best.0 {
                            best = (score, ((mi as u64) << b2) | si as u64);
                        }
                    }
                }
            }
            Kind::Generic { projected } => {
                for (label, p) in projected.iter().enumerate() {
                    let (rho, energy) = p.correlate(y, g, &mut buf);
                    let score = energy - 2.0 * rho.re;
                    if score < best.0 {
                        best = (score, label as u64);
                    }
                }
            }
        }
        if !best.0.is_finite() {
            return Err(crate::Error::Numerical("non-finite detection metric".into()));
        }
        Ok(best.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{AdsmCodebook, DucCodebook};
    use crate::rng::{gaussian_complex_matrix, RngStream};

    fn brute(cb: &Codebook, y: &CMatrix, g: &CMatrix, e: &CMatrix) -> u64 {
        let mut best = (f64::INFINITY, 0);
        for (label, x) in cb.codewords().iter().enumerate() {
            let pred = g.matmul(&x.to_matrix()).unwrap().matmul(e).unwrap();
            let d = y.sub(&pred).unwrap().fro_norm_sq();
            if d < best.0 {
                best = (d, label as u64);
            }
        }
        best.1
    }

    #[test]
    fn matches_dense_search() {
        let mut rng = RngStream::new(12, 0);
        let cbs = [
            Codebook::Adsm(AdsmCodebook::new(4, 4).unwrap()),
            Codebook::Duc(DucCodebook::new(3, vec![1, 1, 3, 3]).unwrap()),
        ];
        for cb in &cbs {
            let e = gaussian_complex_matrix(&mut rng, 4, 2, 0.5).unwrap();
            let det = Detector::new(cb, &e).unwrap();
            for _ in 0..20 {
                let y = gaussian_complex_matrix(&mut rng, 2, 2, 1.0).unwrap();
                let g = gaussian_complex_matrix(&mut rng, 2, 4, 1.0).unwrap();
                assert_eq!(det.detect(&y, &g).unwrap(), brute(cb, &y, &g, &e));
            }
        }
    }

    #[test]
    fn noiseless_recovery() {
        let cb = Codebook::Adsm(AdsmCodebook::new(4, 4).unwrap());
        let e = crate::projection::conventional_basis(4, 4, 1).unwrap().e1().clone();
        let det = Detector::new(&cb, &e).unwrap();
        let h = CMatrix::identity(4);
        for label in 0..16 {
            let y = cb.codeword(label).unwrap().apply(&e);
            assert_eq!(det.detect(&y, &h).unwrap(), label);
        }
    }

    #[test]
    fn rejects_shape_mismatch() {
        let cb = Codebook::Adsm(AdsmCodebook::new(4, 4).unwrap());
        assert!(Detector::new(&cb, &CMatrix::zeros(2, 1)).is_err());
        let det = Detector::new(&cb, &CMatrix::zeros(4, 1)).unwrap();
        assert!(det.detect(&CMatrix::zeros(2, 2), &CMatrix::zeros(2, 4)).is_err());
    }
}
