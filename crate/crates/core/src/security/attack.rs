//! Idealized eavesdropper: perfect CSI, one noise-free known block, full
//! knowledge of the basis construction.
//!
//! Eve fits the construction's phase parameters to her prior observation
//! while penalizing the relaxed objective Alice minimized:
//! `||Y~ - H X~ E||_F^2 + w sum_n ||E^H M^n E||_F`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{AdsmCodebook, Codebook};
use crate::error::{param, Error, Result};
use crate::linalg::{cis, CMatrix, Monomial, C64, ONE, ZERO};
use crate::projection::optimizer::random_start;
use crate::projection::{minimize, DescentOptions, Objective, StepRule};
use crate::rng::RngStream;
use crate::transceiver::{apply_channel, Detector};

use super::SecretSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub n_eve: usize,
    /// Only perfect CSI is modeled.
    pub assume_perfect_csi: bool,
    pub noise_free_prior: bool,
    pub restarts: usize,
    pub max_iters: usize,
    pub reg_weight: f64,
    pub step_rule: StepRule,
    /// Eve's per-symbol SNR; `None` is noiseless.
    pub snr_eve_db: Option<f64>,
    /// Hand Eve the true basis instead of attacking (upper bound on Eve).
    pub oracle: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            n_eve: 2,
            assume_perfect_csi: true,
            noise_free_prior: true,
            restarts: 64,
            max_iters: 2000,
            reg_weight: 1.0,
            step_rule: StepRule::SteepestDescent,
            snr_eve_db: None,
            oracle: false,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_eve == 0 {
            return param("Eve needs at least one receive antenna");
        }
        if !self.assume_perfect_csi {
            return param("only the perfect-CSI eavesdropper is modeled");
        }
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return param(format!("reg_weight must be finite and >= 0, got {}", self.reg_weight));
        }
        if self.restarts == 0 {
            return param("the attack needs at least one restart");
        }
        if let Some(s) = self.snr_eve_db {
            if s.is_nan() {
                return param("Eve SNR must not be NaN");
            }
        }
        Ok(())
    }

    /// Noise variance at Eve; zero when noiseless.
    pub fn noise_variance(&self) -> f64 {
        match self.snr_eve_db {
            None => 0.0,
            Some(db) if db == f64::INFINITY => 0.0,
            Some(db) => crate::transceiver::noise_variance(db),
        }
    }
}

/// Eve's side information: `Y~ = H_Eve X~ E_1 (+ V)`, `H_Eve` and `X~`.
#[derive(Debug, Clone)]
pub struct EvePrior {
    pub y: CMatrix,
    pub h: CMatrix,
    pub x: Monomial,
}

pub fn eve_prior(
    h: &CMatrix,
    x: &Monomial,
    e1: &CMatrix,
    sigma2: f64,
    rng: &mut RngStream,
) -> Result<EvePrior> {
    let y = apply_channel(h, &x.apply(e1), sigma2, rng)?;
    Ok(EvePrior {
        y,
        h: h.clone(),
        x: x.clone(),
    })
}

/// The attack objective over the `nb` support phases of a candidate basis.
pub struct AttackObjective {
    m: usize,
    nb: usize,
    t: usize,
    a: CMatrix,
    y: CMatrix,
    reg_weight: f64,
    corner: C64,
    shifts: Vec<Monomial>,
    shifts_adj: Vec<Monomial>,
}

impl AttackObjective {
    pub fn new(prior: &EvePrior, nb: usize, t: usize, l: usize, reg_weight: f64) -> Result<Self> {
        let m = prior.h.cols();
        if prior.x.dim() != m {
            return param("prior codeword dimension must match the channel");
        }
        if nb == 0 || m % nb != 0 || t == 0 || m % t != 0 {
            return param(format!("Nb={nb} and T={t} must divide M={m}"));
        }
        if prior.y.shape() != (prior.h.rows(), t) {
            return param("prior observation must be N_Eve x T");
        }
        let cb = AdsmCodebook::new(m, l)?;
        let shifts: Vec<Monomial> = (1..=m / 2)
            .map(|n| cb.codeword(n % m, 0))
            .collect::<Result<_>>()?;
        Ok(AttackObjective {
            m,
            nb,
            t,
            a: prior.x.right_apply(&prior.h),
            y: prior.y.clone(),
            reg_weight,
            corner: crate::projection::corner_phase(l),
            shifts_adj: shifts.iter().map(Monomial::adjoint).collect(),
            shifts,
        })
    }

    /// Candidate `M x T` basis from the support phases.
    pub fn basis(&self, theta: &[f64]) -> CMatrix {
        let beta = self.m / self.nb;
        let amp = 1.0 / (self.nb as f64).sqrt();
        let mut e = CMatrix::zeros(self.m, self.t);
        for (k, &th) in theta.iter().enumerate() {
            let v = cis(th) * amp;
            for col in 0..self.t {
                e[((k * beta + col) % self.m, col)] = v;
            }
        }
        e
    }

    /// Single-column path without intermediate matrices.
    fn eval_vector(&self, theta: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let m = self.m;
        let beta = m / self.nb;
        let amp = 1.0 / (self.nb as f64).sqrt();
        let mut e = vec![ZERO; m];
        for (k, &th) in theta.iter().enumerate() {
            e[k * beta] = cis(th) * amp;
        }
        let n_rx = self.a.rows();
        let mut resid = vec![ZERO; n_rx];
        for (i, r) in resid.iter_mut().enumerate() {
            let mut acc = -self.y[(i, 0)];
            for k in 0..self.nb {
                acc += self.a[(i, k * beta)] * e[k * beta];
            }
            *r = acc;
        }
        let mut f: f64 = resid.iter().map(|r| r.norm_sqr()).sum();
        let mut grad = vec![0.0; if want_grad { self.nb } else { 0 }];
        if want_grad {
            for (k, gk) in grad.iter_mut().enumerate() {
                let col = k * beta;
                let mut g = ZERO;
                for (i, r) in resid.iter().enumerate() {
                    g += self.a[(i, col)].conj() * r;
                }
                *gk = -2.0 * (g.conj() * e[col]).im;
            }
        }
        if self.reg_weight > 0.0 {
            let mut terms = vec![(0usize, 0usize, ZERO); self.nb];
            for n in 1..=m / 2 {
                // support entry k pairs with the one n positions behind it, wrapping through the corner
                let mut z = ZERO;
                let mut used = 0;
                for k in 0..self.nb {
                    let row = k * beta;
                    let (src, phase) = if row >= n { (row - n, ONE) } else { (row + m - n, self.corner) };
                    if src % beta != 0 {
                        continue;
                    }
                    let term = phase * e[row].conj() * e[src];
                    z += term;
                    terms[used] = (k, src / beta, term);
                    used += 1;
                }
                let a = z.norm();
                f += self.reg_weight * a;
                if want_grad && a >= crate::projection::objective::SUBGRADIENT_FLOOR {
                    for &(k, j, term) in &terms[..used] {
                        let w = self.reg_weight * (z.conj() * term).im / a;
                        grad[k] += w;
                        grad[j] -= w;
                    }
                }
            }
        }
        (f, grad)
    }

    fn eval(&self, theta: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        if self.t == 1 {
            return self.eval_vector(theta, want_grad);
        }
        self.eval_matrix(theta, want_grad)
    }

    fn eval_matrix(&self, theta: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let e = self.basis(theta);
        let resid = self.a.matmul(&e).expect("shapes").sub(&self.y).expect("shapes");
        let mut f = resid.fro_norm_sq();
        let mut g = if want_grad {
            self.a.adjoint_mul(&resid).expect("shapes")
        } else {
            CMatrix::zeros(0, 0)
        };
        if self.reg_weight > 0.0 {
            for (b, bh) in self.shifts.iter().zip(&self.shifts_adj) {
                let be = b.apply(&e);
                let r = e.adjoint_mul(&be).expect("shapes");
                let norm = r.fro_norm_sq().sqrt();
                f += self.reg_weight * norm;
                if want_grad && norm >= crate::projection::objective::SUBGRADIENT_FLOOR {
                    let part = be
                        .matmul(&r.adjoint())
                        .expect("shapes")
                        .add(&bh.apply(&e).matmul(&r).expect("shapes"))
                        .expect("shapes");
                    g.add_assign(&part.scale(C64::new(self.reg_weight / (2.0 * norm), 0.0)))
                        .expect("shapes");
                }
            }
        }
        if !want_grad {
            return (f, Vec::new());
        }
        // d/dtheta_k = -2 Im sum conj(G) E over the entries carrying theta_k
        let beta = self.m / self.nb;
        let mut grad = vec![0.0; self.nb];
        for (k, gk) in grad.iter_mut().enumerate() {
            let mut acc = ZERO;
            for col in 0..self.t {
                let row = (k * beta + col) % self.m;
                acc += g[(row, col)].conj() * e[(row, col)];
            }
            *gk = -2.0 * acc.im;
        }
        (f, grad)
    }
}

impl Objective for AttackObjective {
    fn dim(&self) -> usize {
        self.nb
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, false).0
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self.eval(x, true)
    }
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub estimate: CMatrix,
    pub angles: Vec<f64>,
    pub objective: f64,
    /// `||Y~ - H X~ E^||_F`.
    pub residual: f64,
    pub best_restart: usize,
}

/// Multi-start minimization of the attack objective; lowest objective wins,
/// ties to the lower restart index.
pub fn eve_estimate_basis(
    prior: &EvePrior,
    cfg: &AttackConfig,
    nb: usize,
    t: usize,
    l: usize,
    rng: &RngStream,
) -> Result<AttackOutcome> {
    cfg.validate()?;
    if prior.h.rows() != cfg.n_eve {
        return param(format!(
            "prior channel has {} rows but n_eve = {}",
            prior.h.rows(),
            cfg.n_eve
        ));
    }
    let obj = AttackObjective::new(prior, nb, t, l, cfg.reg_weight)?;
    let opts = DescentOptions {
        max_iters: cfg.max_iters,
        step_rule: cfg.step_rule,
        f_target: 0.0,
        ..DescentOptions::default()
    };
    let runs: Vec<(Vec<f64>, f64)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut s = rng.derive(r as u64);
            let mut start = random_start(&mut s, nb);
            start[0] = s.angle();
            let out = minimize(&obj, start, &opts);
            (out.x, out.f)
        })
        .collect();
    let (best_restart, (angles, objective)) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.1.total_cmp(&b.1).then(ia.cmp(ib)))
        .expect("at least one restart");
    if !objective.is_finite() {
        return Err(Error::Numerical("attack objective diverged".into()));
    }
    let estimate = obj.basis(&angles);
    let residual = obj
        .a
        .matmul(&estimate)?
        .sub(&obj.y)?
        .fro_norm_sq()
        .sqrt();
    Ok(AttackOutcome {
        estimate,
        angles,
        objective,
        residual,
        best_restart,
    })
}

/// Coherent ML detection `argmin_X ||Y - H X E^||_F`.
pub fn eve_detect(y: &CMatrix, h: &CMatrix, ehat: &CMatrix, cb: &Codebook) -> Result<u64> {
    Detector::new(cb, ehat)?.detect(y, h)
}

/// Everything one Monte Carlo trial of the attack needs.
#[derive(Debug, Clone)]
pub(crate) struct TrialSetup {
    pub e1: CMatrix,
    pub h: CMatrix,
    pub ehat: CMatrix,
}

const TRIAL_KEY: u64 = 0;
const TRIAL_CHANNEL: u64 = 1;
const TRIAL_PRIOR: u64 = 2;
const TRIAL_ATTACK: u64 = 3;

/// The legitimate basis of a trial, from a key drawn off the trial stream.
pub(crate) fn trial_basis(
    rng: &RngStream,
    m: usize,
    nb: usize,
    t: usize,
    l: usize,
    alice: &crate::projection::OptimizerOptions,
) -> Result<CMatrix> {
    use rand::RngCore;
    let key = SecretSeed(rng.derive(TRIAL_KEY).next_u64());
    Ok(super::derive_basis_from_key(key, m, nb, t, l, alice)?.into_matrix())
}

/// Fresh key, fresh Eve channel, fresh known block, then the attack.
#[allow(clippy::too_many_arguments)]
pub(crate) fn attack_trial(
    rng: &RngStream,
    m: usize,
    nb: usize,
    t: usize,
    cb: &AdsmCodebook,
    alice: &crate::projection::OptimizerOptions,
    cfg: &AttackConfig,
) -> Result<TrialSetup> {
    let e1 = trial_basis(rng, m, nb, t, cb.l(), alice)?;
    let h = crate::rng::gaussian_complex_matrix(&mut rng.derive(TRIAL_CHANNEL), cfg.n_eve, m, 1.0)?;
    if cfg.oracle {
        return Ok(TrialSetup {
            ehat: e1.clone(),
            e1,
            h,
        });
    }
    let mut prior_rng = rng.derive(TRIAL_PRIOR);
    let x = cb.word(crate::rng::random_word(&mut prior_rng, cb.bits()))?;
    let sigma2 = if cfg.noise_free_prior { 0.0 } else { cfg.noise_variance() };
    let prior = eve_prior(&h, &x, &e1, sigma2, &mut prior_rng)?;
    let out = eve_estimate_basis(&prior, cfg, nb, t, cb.l(), &rng.derive(TRIAL_ATTACK))?;
    Ok(TrialSetup {
        ehat: out.estimate,
        e1,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::OptimizerOptions;
    use crate::rng::gaussian_complex_matrix;
    use crate::security::derive_basis_from_key;

    fn prior(m: usize, n_eve: usize, nb: usize, t: usize, seed: u64) -> (EvePrior, CMatrix) {
        let opts = OptimizerOptions {
            restarts: 2,
            ..Default::default()
        };
        let e1 = derive_basis_from_key(SecretSeed(seed), m, nb, t, 4, &opts)
            .unwrap()
            .into_matrix();
        let mut rng = RngStream::new(seed, 5);
        let h = gaussian_complex_matrix(&mut rng, n_eve, m, 1.0).unwrap();
        let x = AdsmCodebook::new(m, 4).unwrap().codeword(1, 3).unwrap();
        (eve_prior(&h, &x, &e1, 0.0, &mut rng).unwrap(), e1)
    }

    #[test]
    fn vector_path_matches_matrix_path() {
        for (m, nb) in [(8, 8), (16, 4), (4, 2)] {
            let (p, _) = prior(m, 2, nb, 1, 5);
            let obj = AttackObjective::new(&p, nb, 1, 4, 1.3).unwrap();
            let mut rng = RngStream::new(2, 2);
            let x: Vec<f64> = (0..nb).map(|_| rng.angle()).collect();
            let (fv, gv) = obj.eval_vector(&x, true);
            let (fm, gm) = obj.eval_matrix(&x, true);
            assert!((fv - fm).abs() < 1e-12, "{fv} {fm}");
            for (a, b) in gv.iter().zip(&gm) {
                assert!((a - b).abs() < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (m, nb, t) in [(8, 8, 1), (16, 4, 1), (8, 4, 2), (16, 4, 4)] {
            let (p, _) = prior(m, 3, nb, t, 11);
            let obj = AttackObjective::new(&p, nb, t, 4, 0.7).unwrap();
            let mut rng = RngStream::new(1, 1);
            let x: Vec<f64> = (0..nb).map(|_| rng.angle()).collect();
            let (_, g) = obj.value_and_gradient(&x);
            for k in 0..nb {
                let mut a = x.clone();
                let mut b = x.clone();
                a[k] += 1e-6;
                b[k] -= 1e-6;
                let fd = (obj.value(&a) - obj.value(&b)) / 2e-6;
                assert!((fd - g[k]).abs() < 1e-5 * g[k].abs().max(1.0), "{m} {nb} {t} {k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn basis_matches_time_expansion() {
        let (p, e1) = prior(8, 2, 4, 2, 3);
        let obj = AttackObjective::new(&p, 4, 2, 4, 1.0).unwrap();
        let beta = 2;
        let theta: Vec<f64> = (0..4).map(|k| e1[(k * beta, 0)].arg()).collect();
        assert!(obj.basis(&theta).max_abs_diff(&e1) < 1e-12);
    }

    #[test]
    fn full_rank_eve_recovers_the_basis() {
        let (p, e1) = prior(2, 2, 2, 1, 9);
        let cfg = AttackConfig {
            n_eve: 2,
            restarts: 8,
            step_rule: StepRule::Bfgs,
            ..Default::default()
        };
        let out = eve_estimate_basis(&p, &cfg, 2, 1, 4, &RngStream::new(0, 0)).unwrap();
        assert!(out.residual < 1e-6, "{}", out.residual);
        assert!(out.estimate.max_abs_diff(&e1) < 1e-5);
    }

    #[test]
    fn oracle_detection_is_exact() {
        let (p, e1) = prior(8, 2, 8, 1, 4);
        let cb = Codebook::Adsm(AdsmCodebook::new(8, 4).unwrap());
        for label in 0..32 {
            let y = cb.codeword(label).unwrap().right_apply(&p.h).matmul(&e1).unwrap();
            assert_eq!(eve_detect(&y, &p.h, &e1, &cb).unwrap(), label);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let (p, _) = prior(4, 2, 4, 1, 1);
        let mut cfg = AttackConfig::default();
        cfg.reg_weight = -1.0;
        assert!(eve_estimate_basis(&p, &cfg, 4, 1, 4, &RngStream::new(0, 0)).is_err());
        let cfg = AttackConfig { n_eve: 3, ..Default::default() };
        assert!(eve_estimate_basis(&p, &cfg, 4, 1, 4, &RngStream::new(0, 0)).is_err());
    }
}
