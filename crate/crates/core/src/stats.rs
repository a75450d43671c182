//! Sample mean and standard error, reduced in a fixed order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean; zero for fewer than two samples.
    pub stderr: f64,
    pub count: usize,
}

impl Estimate {
    /// Welford accumulation in slice order, so the result never depends on
    /// how the samples were produced in parallel.
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        let n = samples.len();
        let stderr = if n > 1 {
            (m2 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean: if n == 0 { f64::NAN } else { mean },
            stderr,
            count: n,
        }
    }
}

/// `log2(sum exp(x_i))` with max-subtraction.
pub fn log2_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = x.iter().map(|v| (v - max).exp()).sum();
    (max + s.ln()) / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert!((e.mean - 2.5).abs() < 1e-15);
        // sample variance 5/3, stderr sqrt(5/12)
        assert!((e.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(Estimate::from_samples(&[7.0]).stderr, 0.0);
    }

    #[test]
    fn lse_is_stable() {
        assert!((log2_sum_exp(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
        let big = log2_sum_exp(&[1000.0, 1000.0]);
        assert!((big - (1000.0 / std::f64::consts::LN_2 + 1.0)).abs() < 1e-9);
        let small = log2_sum_exp(&[-1e5, 0.0]);
        assert!(small.abs() < 1e-15);
    }
}
