//! Differential encoder and noncoherent receiver state.

use crate::error::{param, Error, Result};
use crate::linalg::{CMatrix, Monomial, C64};

use super::detector::Detector;

pub const ALPHA_MIN: f64 = 0.01;
pub const ALPHA_MAX: f64 = 0.99;
/// Forgetting factor before the first data block.
pub const ALPHA_INITIAL: f64 = 0.5;

/// `N T sigma^2 / ||D||_F^2`. A zero residual maps to `+inf`.
pub fn raw_forgetting_factor(n: usize, t: usize, sigma2: f64, residual_sq: f64) -> Result<f64> {
    if !(sigma2 >= 0.0) || !(residual_sq >= 0.0) {
        return Err(Error::Numerical(format!(
            "forgetting factor from sigma2={sigma2}, residual={residual_sq}"
        )));
    }
    if residual_sq == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((n * t) as f64 * sigma2 / residual_sq)
}

pub fn clamp_forgetting_factor(alpha_v: f64) -> f64 {
    alpha_v.clamp(ALPHA_MIN, ALPHA_MAX)
}

pub fn forgetting_factor(n: usize, t: usize, sigma2: f64, residual_sq: f64) -> Result<f64> {
    Ok(clamp_forgetting_factor(raw_forgetting_factor(n, t, sigma2, residual_sq)?))
}

/// Running product `S(i) = S(i-1) X(i)`, available once the preamble is out.
#[derive(Debug, Clone)]
pub struct Encoder {
    m: usize,
    preamble_len: usize,
    preamble_sent: usize,
    state: Option<Monomial>,
}

impl Encoder {
    pub fn new(m: usize, t: usize) -> Result<Encoder> {
        if t == 0 || m % t != 0 {
            return param(format!("T={t} must divide M={m}"));
        }
        Ok(Encoder {
            m,
            preamble_len: m / t,
            preamble_sent: 0,
            state: None,
        })
    }

    /// Registers one of the `M/T` preamble blocks and passes it through.
    pub fn preamble(&mut self, block: &CMatrix) -> Result<CMatrix> {
        if self.state.is_some() {
            return Err(Error::State("preamble already complete".into()));
        }
        if block.rows() != self.m {
            return param("preamble block must have M rows");
        }
        self.preamble_sent += 1;
        if self.preamble_sent == self.preamble_len {
            self.state = Some(Monomial::identity(self.m));
        }
        Ok(block.clone())
    }

    /// Advances the state by `x` and returns `S(i) E_1`.
    pub fn encode(&mut self, x: &Monomial, e1: &CMatrix) -> Result<CMatrix> {
        let Some(s) = self.state.as_mut() else {
            return Err(Error::State(format!(
                "cannot encode data after {} of {} preamble blocks",
                self.preamble_sent, self.preamble_len
            )));
        };
        *s = s.compose(x);
        Ok(s.apply(e1))
    }

    pub fn state(&self) -> Option<&Monomial> {
        self.state.as_ref()
    }
}

/// Noncoherent receiver: the estimate `Yhat ~ H S(i)` and forgetting factor.
#[derive(Debug, Clone)]
pub struct Receiver {
    n: usize,
    m: usize,
    t: usize,
    sigma2: f64,
    preamble_len: usize,
    preamble_seen: usize,
    acc: CMatrix,
    yhat: Option<CMatrix>,
    alpha: f64,
}

impl Receiver {
    pub fn new(n: usize, m: usize, t: usize, sigma2: f64) -> Result<Receiver> {
        if t == 0 || m % t != 0 {
            return param(format!("T={t} must divide M={m}"));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return param(format!("noise variance must be finite and nonnegative, got {sigma2}"));
        }
        Ok(Receiver {
            n,
            m,
            t,
            sigma2,
            preamble_len: m / t,
            preamble_seen: 0,
            acc: CMatrix::zeros(n, m),
            yhat: None,
            alpha: ALPHA_INITIAL,
        })
    }

    /// Accumulates `Y(k) B_k^H` for the known preamble block `B_k`.
    pub fn accept_preamble(&mut self, y: &CMatrix, block: &CMatrix) -> Result<()> {
        if self.yhat.is_some() {
            return Err(Error::State("preamble already complete".into()));
        }
        if y.shape() != (self.n, self.t) || block.shape() != (self.m, self.t) {
            return param("preamble block dimensions disagree with the receiver");
        }
        self.acc.add_assign(&y.matmul(&block.adjoint())?)?;
        self.preamble_seen += 1;
        if self.preamble_seen == self.preamble_len {
            self.yhat = Some(std::mem::replace(&mut self.acc, CMatrix::zeros(0, 0)));
        }
        Ok(())
    }

    pub fn is_ready(&self) -> bool {
        self.yhat.is_some()
    }

    pub fn estimate(&self) -> Result<&CMatrix> {
        self.yhat.as_ref().ok_or_else(|| {
            Error::State(format!(
                "receiver has seen {} of {} preamble blocks",
                self.preamble_seen, self.preamble_len
            ))
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Detects the codeword label of `y`, then updates the estimate.
    pub fn receive(
        &mut self,
        y: &CMatrix,
        detector: &Detector,
        codewords: &[Monomial],
        e1: &CMatrix,
    ) -> Result<u64> {
        let label = detector.detect(y, self.estimate()?)?;
        let x = codewords
            .get(label as usize)
            .ok_or_else(|| Error::Parameter(format!("label {label} outside the codebook")))?;
        self.update(y, x, e1)?;
        Ok(label)
    }

    /// `Yhat <- Z + (1 - alpha) D E_1^H` with `Z = Yhat X` and `D = Y - Z E_1`.
    pub fn update(&mut self, y: &CMatrix, x: &Monomial, e1: &CMatrix) -> Result<()> {
        let z = x.right_apply(self.estimate()?);
        let d = y.sub(&z.matmul(e1)?)?;
        self.alpha = forgetting_factor(self.n, self.t, self.sigma2, d.fro_norm_sq())?;
        let next = z.add(&d.matmul(&e1.adjoint())?.scale(C64::new(1.0 - self.alpha, 0.0)))?;
        if !next.is_finite() {
            return Err(Error::Numerical("estimate update produced non-finite values".into()));
        }
        self.yhat = Some(next);
        Ok(())
    }
}

/// Literal update `Y (1 - alpha) E_1^H + Z (alpha E_1 E_1^H + sum_{k>=2} E_k E_k^H)`
/// over a full reconstructible basis `[E_1, ..., E_{M/T}]`.
pub fn basis_form_update(y: &CMatrix, z: &CMatrix, alpha: f64, basis: &[CMatrix]) -> Result<CMatrix> {
    let m = z.cols();
    let mut mix = CMatrix::zeros(m, m);
    for (k, e) in basis.iter().enumerate() {
        let w = if k == 0 { alpha } else { 1.0 };
        mix.add_assign(&e.matmul(&e.adjoint())?.scale(C64::new(w, 0.0)))?;
    }
    let fresh = y.matmul(&basis[0].adjoint())?.scale(C64::new(1.0 - alpha, 0.0));
    fresh.add(&z.matmul(&mix)?)
}

/// Literal update `Y (1 - alpha) E_1^H + Z (I - (1 - alpha) E_1 E_1^H)`.
pub fn single_matrix_update(y: &CMatrix, z: &CMatrix, alpha: f64, e1: &CMatrix) -> Result<CMatrix> {
    let m = z.cols();
    let e_one_minus = e1.adjoint().scale(C64::new(1.0 - alpha, 0.0));
    let mix = CMatrix::identity(m).sub(&e1.matmul(&e_one_minus)?)?;
    y.matmul(&e_one_minus)?.add(&z.matmul(&mix)?)
}
