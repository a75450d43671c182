//! Multi-start first-order descent over unit-modulus phases.
//!
//! The unit-modulus constraint is parameterized exactly by the angles, so the
//! problem is unconstrained in `theta[1..]` (`theta[0] = 0` is the gauge).
//! Each restart runs steepest descent or BFGS with a monotone backtracking
//! line search; the seeded restarts make the map seed -> basis deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{is_power_of_two, param, Error, Result};
use crate::linalg::C64;
use crate::rng::RngStream;

use super::basis::{angles_to_vector, AngleVector, ProjectionVector};
use super::objective::{corner_phase, objective_and_gradient, objective_of_angles};

/// Smooth or nonsmooth objective of the free variables.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Negative gradient direction.
    SteepestDescent,
    /// Quasi-Newton direction from the inverse-Hessian BFGS recursion.
    #[default]
    Bfgs,
}

impl std::str::FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steepest-descent" | "sd" => Ok(StepRule::SteepestDescent),
            "bfgs" => Ok(StepRule::Bfgs),
            other => param(format!("unknown step rule '{other}' (expected bfgs or steepest-descent)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub max_iters: usize,
    /// Stop when the gradient norm falls below this.
    pub grad_tol: f64,
    /// Stop when the objective reaches this value (the objectives here are nonnegative).
    pub f_target: f64,
    pub step_rule: StepRule,
    pub record_path: bool,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            grad_tol: 1e-8,
            f_target: 1e-15,
            step_rule: StepRule::Bfgs,
            record_path: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    TargetReached,
    /// No decrease found along the search direction (typical at a kink).
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Accepted iterates `(x, f)`, including the start, when recorded.
    pub path: Vec<(Vec<f64>, f64)>,
}

impl DescentOutcome {
    pub fn converged(&self) -> bool {
        self.termination != Termination::MaxIterations
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Backtracking with Armijo acceptance, then greedy halving while it keeps
/// improving. Returns the accepted step and value, or `None` if no decrease.
fn line_search<O: Objective + ?Sized>(
    obj: &O,
    x: &[f64],
    f0: f64,
    slope: f64,
    d: &[f64],
    t0: f64,
) -> Option<(f64, f64)> {
    let mut t = t0;
    let mut accepted = None;
    for _ in 0..MAX_HALVINGS {
        let ft = obj.value(&axpy(x, t, d));
        if ft.is_finite() && ft <= f0 + ARMIJO * t * slope && ft < f0 {
            accepted = Some((t, ft));
            break;
        }
        t *= 0.5;
    }
    let (mut t, mut ft) = accepted?;
    for _ in 0..MAX_HALVINGS {
        let half = obj.value(&axpy(x, t * 0.5, d));
        if half < ft {
            t *= 0.5;
            ft = half;
        } else {
            break;
        }
    }
    Some((t, ft))
}

/// Minimizes `obj` from `x0`. Accepted iterates strictly decrease the objective.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: Vec<f64>, opts: &DescentOptions) -> DescentOutcome {
    let n = obj.dim();
    let mut x = x0;
    let (mut f, mut g) = obj.value_and_gradient(&x);
    let mut path = Vec::new();
    if opts.record_path {
        path.push((x.clone(), f));
    }
    if n == 0 {
        return DescentOutcome {
            x,
            f,
            iterations: 0,
            termination: Termination::GradientTolerance,
            path,
        };
    }

    // inverse Hessian approximation, row-major n x n
    let mut h: Vec<f64> = identity(n);
    let mut fresh_h = true;
    let mut last_step = 1.0f64;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    for it in 0..opts.max_iters {
        iterations = it;
        if f <= opts.f_target {
            termination = Termination::TargetReached;
            break;
        }
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < opts.grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }

        let (mut d, t0) = match opts.step_rule {
            StepRule::SteepestDescent => (g.iter().map(|v| -v).collect::<Vec<_>>(), (2.0 * last_step).min(1e3)),
            StepRule::Bfgs => (mat_vec_neg(&h, &g), 1.0),
        };
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = identity(n);
            fresh_h = true;
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }

        let Some((t, f_accepted)) = line_search(obj, &x, f, slope, &d, t0) else {
            if opts.step_rule == StepRule::Bfgs && !fresh_h {
                // retry once along the gradient before giving up
                h = identity(n);
                fresh_h = true;
                continue;
            }
            termination = Termination::Stalled;
            break;
        };
        last_step = t;
        let x_new = axpy(&x, t, &d);
        // keep the value the line search verified; the two evaluation paths can differ in the last ulp
        let (_, g_new) = obj.value_and_gradient(&x_new);
        let f_new = f_accepted;

        if opts.step_rule == StepRule::Bfgs {
            let s: Vec<f64> = d.iter().map(|v| v * t).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy.is_finite() {
                if fresh_h {
                    let scale = sy / dot(&y, &y);
                    h.iter_mut().for_each(|v| *v *= scale);
                    fresh_h = false;
                }
                bfgs_update(&mut h, &s, &y, sy);
            }
        }

        x = x_new;
        f = f_new;
        g = g_new;
        if opts.record_path {
            path.push((x.clone(), f));
        }
        iterations = it + 1;
    }

    DescentOutcome {
        x,
        f,
        iterations,
        termination,
        path,
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec_neg(h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], g)).collect()
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    let coef = (1.0 + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// The relaxed coding-gain objective over the free angles `theta[1..]`.
pub struct AngleObjective {
    m: usize,
    corner: C64,
}

impl AngleObjective {
    pub fn new(m: usize, l: usize) -> Self {
        Self {
            m,
            corner: corner_phase(l),
        }
    }

    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.m);
        theta.push(0.0);
        theta.extend_from_slice(x);
        theta
    }
}

impl Objective for AngleObjective {
    fn dim(&self) -> usize {
        self.m - 1
    }

    fn value(&self, x: &[f64]) -> f64 {
        objective_of_angles(&self.full(x), self.corner)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (f, g) = objective_and_gradient(&self.full(x), self.corner);
        (f, g[1..].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub tol: f64,
    pub record_path: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 2000,
            step_rule: StepRule::Bfgs,
            tol: 1e-8,
            record_path: false,
        }
    }
}

impl OptimizerOptions {
    pub fn descent(&self) -> DescentOptions {
        DescentOptions {
            max_iters: self.max_iters,
            grad_tol: self.tol,
            step_rule: self.step_rule,
            record_path: self.record_path,
            ..DescentOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub initial: AngleVector,
    pub initial_f: f64,
    pub final_angles: AngleVector,
    pub final_f: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Accepted iterates as full angle vectors (empty unless recorded).
    pub path: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedProjection {
    pub angles: AngleVector,
    pub vector: ProjectionVector,
    pub f_value: f64,
    pub best_restart: usize,
    pub converged: bool,
    pub trace: Vec<RestartTrace>,
}

/// Draws a gauge-fixed start: `theta[0] = 0`, the rest uniform on `[0, 2 pi)`.
pub fn random_start(rng: &mut RngStream, m: usize) -> Vec<f64> {
    let mut theta = vec![0.0; m];
    for t in theta.iter_mut().skip(1) {
        *t = rng.angle();
    }
    theta
}

/// Minimizes `f(e1)` over dense unit-modulus vectors of length `m`.
///
/// Restart `r` draws its start from `rng.derive(r)`; restarts run in parallel
/// and the lowest objective wins, ties going to the lower restart index.
pub fn optimize_projection(
    m: usize,
    l: usize,
    rng: &RngStream,
    opts: &OptimizerOptions,
) -> Result<OptimizedProjection> {
    if !is_power_of_two(m) {
        return param(format!("projection length M must be a power of two, got {m}"));
    }
    if !is_power_of_two(l) || l < 2 {
        return param(format!("PSK order L must be a power of two >= 2, got {l}"));
    }
    if opts.restarts == 0 {
        return param("at least one restart is required");
    }
    let objective = AngleObjective::new(m, l);
    let descent = opts.descent();

    let trace: Vec<RestartTrace> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng.derive(r as u64);
            let start = random_start(&mut stream, m);
            let initial_f = objective.value(&start[1..]);
            let out = minimize(&objective, start[1..].to_vec(), &descent);
            let full = |x: &[f64]| {
                let mut t = vec![0.0];
                t.extend_from_slice(x);
                t
            };
            RestartTrace {
                initial: AngleVector::new(start.clone()).expect("finite"),
                initial_f,
                final_angles: AngleVector::new(full(&out.x)).expect("finite"),
                final_f: out.f,
                iterations: out.iterations,
                termination: out.termination,
                path: out.path.iter().map(|(x, f)| (full(x), *f)).collect(),
            }
        })
        .collect();

    let (best_restart, best) = trace
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.final_f.total_cmp(&b.final_f).then(ia.cmp(ib)))
        .expect("at least one restart");
    if !best.final_f.is_finite() {
        return Err(Error::Numerical("objective diverged".into()));
    }
    let angles = best.final_angles.clone();
    Ok(OptimizedProjection {
        vector: angles_to_vector(&angles),
        f_value: best.final_f,
        best_restart,
        converged: best.termination != Termination::MaxIterations,
        angles,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2)
        }
        fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
            (self.value(x), vec![2.0 * (x[0] - 1.0), 20.0 * (x[1] + 2.0)])
        }
    }

    struct Kink;

    impl Objective for Kink {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            (x[0] - 0.3).abs()
        }
        fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
            (self.value(x), vec![(x[0] - 0.3).signum()])
        }
    }

    #[test]
    fn both_rules_solve_a_quadratic() {
        for rule in [StepRule::Bfgs, StepRule::SteepestDescent] {
            let opts = DescentOptions {
                step_rule: rule,
                f_target: 0.0,
                ..Default::default()
            };
            let out = minimize(&Quadratic, vec![0.0, 0.0], &opts);
            assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] + 2.0).abs() < 1e-6, "{rule:?} {out:?}");
        }
    }

    #[test]
    fn converges_into_a_kink() {
        for rule in [StepRule::Bfgs, StepRule::SteepestDescent] {
            let opts = DescentOptions {
                step_rule: rule,
                record_path: true,
                ..Default::default()
            };
            let out = minimize(&Kink, vec![2.0], &opts);
            assert!(out.f < 1e-12, "{rule:?}: {}", out.f);
            assert!(out.path.windows(2).all(|w| w[1].1 < w[0].1));
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        let rng = RngStream::new(1, 0);
        assert!(matches!(
            optimize_projection(3, 4, &rng, &OptimizerOptions::default()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn two_antennas_reach_zero() {
        for seed in 0..5 {
            let rng = RngStream::new(seed, 0);
            let out = optimize_projection(2, 4, &rng, &OptimizerOptions::default()).unwrap();
            assert!(out.f_value < 1e-9, "seed {seed}: {}", out.f_value);
            assert_eq!(out.angles.as_slice()[0], 0.0);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let opts = OptimizerOptions {
            restarts: 4,
            ..Default::default()
        };
        let a = optimize_projection(8, 4, &RngStream::new(9, 3), &opts).unwrap();
        let b = optimize_projection(8, 4, &RngStream::new(9, 3), &opts).unwrap();
        assert_eq!(a.angles, b.angles);
        assert_eq!(a.f_value.to_bits(), b.f_value.to_bits());
    }

    #[test]
    fn single_antenna_is_trivial() {
        let out = optimize_projection(1, 4, &RngStream::new(0, 0), &OptimizerOptions::default()).unwrap();
        assert_eq!(out.f_value, 0.0);
        assert_eq!(out.vector.values().len(), 1);
    }
}
