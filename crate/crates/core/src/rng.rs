//! Seeded, splittable random streams.
//!
//! A stream is identified by `(master_seed, stream_id)` and backed by ChaCha8
//! with the stream id in the ChaCha nonce, so substreams of one master seed are
//! independent and every draw can be replayed. Parallel tasks never share a
//! stream: each derives its own with [`RngStream::derive`].

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{param, Result};
use crate::linalg::{CMatrix, C64};

/// Identifier recorded in every output file.
pub const RNG_ALGORITHM_ID: &str = "chacha8-splitmix64-streams/v1";

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn algorithm_id(&self) -> &'static str {
        RNG_ALGORITHM_ID
    }

    /// Fresh substream keyed by `label`, positioned at its start.
    ///
    /// Depends only on `(master_seed, stream_id, label)`, never on how many
    /// draws were taken from `self`.
    pub fn derive(&self, label: u64) -> RngStream {
        let id = splitmix64(self.stream_id ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d)));
        RngStream::new(self.master_seed, id)
    }

    /// Nested derivation, e.g. `derive_path(&[snr_index, frame_index])`.
    pub fn derive_path(&self, labels: &[u64]) -> RngStream {
        labels.iter().fold(self.clone(), |s, &l| s.derive(l))
    }

    /// Uniform angle in `[0, 2 pi)`.
    pub fn angle(&mut self) -> f64 {
        self.random::<f64>() * std::f64::consts::TAU
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.random_range(0..n)
    }

    /// Circularly symmetric complex Gaussian with the given variance.
    pub fn complex_normal(&mut self, variance: f64) -> C64 {
        let s = (variance / 2.0).sqrt();
        let re: f64 = self.sample(StandardNormal);
        let im: f64 = self.sample(StandardNormal);
        C64::new(re * s, im * s)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Matrix of i.i.d. CN(0, variance) entries.
pub fn gaussian_complex_matrix(
    rng: &mut RngStream,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Result<CMatrix> {
    if !(variance > 0.0 && variance.is_finite()) {
        return param(format!("variance must be positive and finite, got {variance}"));
    }
    Ok(CMatrix::from_fn(rows, cols, |_, _| rng.complex_normal(variance)))
}

/// Haar-distributed `M x M` unitary.
///
/// Gram-Schmidt (applied twice per column) on a complex Gaussian matrix; the
/// triangular factor has a real positive diagonal, which fixes the phase
/// convention and makes the result a function of the stream alone.
pub fn random_unitary(rng: &mut RngStream, m: usize) -> Result<CMatrix> {
    if m == 0 {
        return param("unitary dimension must be at least 1");
    }
    let g = gaussian_complex_matrix(rng, m, m, 1.0)?;
    let mut cols: Vec<Vec<C64>> = (0..m).map(|c| g.column(c)).collect();
    for j in 0..m {
        for _pass in 0..2 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[i];
                let v = &mut rest[0];
                let proj: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, qi) in v.iter_mut().zip(q) {
                    *x -= proj * qi;
                }
            }
        }
        let norm = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(crate::Error::Numerical("rank-deficient Gaussian draw".into()));
        }
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    let mut u = CMatrix::zeros(m, m);
    for (c, v) in cols.iter().enumerate() {
        u.set_column(c, v);
    }
    Ok(u)
}

/// `count` uniform bits packed into the low bits of a word.
pub fn random_word(rng: &mut RngStream, bits: u32) -> u64 {
    if bits == 0 {
        0
    } else {
        rng.next_u64() >> (64 - bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_second_moment() {
        let mut rng = RngStream::new(7, 0);
        let n = 100_000;
        let h = gaussian_complex_matrix(&mut rng, n, 1, 1.0).unwrap();
        let mean = h.fro_norm_sq() / n as f64;
        // |h|^2 ~ Exp(1): std of the mean is 1/sqrt(n) ~ 0.0032, so 0.02 is > 6 sigma
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
        let re_var = h.as_slice().iter().map(|x| x.re * x.re).sum::<f64>() / n as f64;
        assert!((re_var - 0.5).abs() < 0.02, "{re_var}");
    }

    #[test]
    fn gaussian_rejects_nonpositive_variance() {
        let mut rng = RngStream::new(1, 1);
        assert!(gaussian_complex_matrix(&mut rng, 2, 2, 0.0).is_err());
        assert!(gaussian_complex_matrix(&mut rng, 2, 2, -1.0).is_err());
    }

    #[test]
    fn same_stream_same_draws() {
        let a = gaussian_complex_matrix(&mut RngStream::new(3, 9), 4, 4, 1.0).unwrap();
        let b = gaussian_complex_matrix(&mut RngStream::new(3, 9), 4, 4, 1.0).unwrap();
        assert_eq!(a, b);
        let c = gaussian_complex_matrix(&mut RngStream::new(3, 10), 4, 4, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn derive_ignores_parent_position() {
        let parent = RngStream::new(11, 2);
        let mut used = parent.clone();
        used.next_u64();
        assert_eq!(parent.derive(5).next_u64(), used.derive(5).next_u64());
        assert_ne!(parent.derive(5).next_u64(), parent.derive(6).next_u64());
    }

    #[test]
    fn unitary_examples() {
        let mut rng = RngStream::new(5, 0);
        let u1 = random_unitary(&mut rng, 1).unwrap();
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-15);

        let u8 = random_unitary(&mut rng, 8).unwrap();
        let gram = u8.adjoint_mul(&u8).unwrap();
        assert!(gram.max_abs_diff(&CMatrix::identity(8)) < 1e-10);

        let a = random_unitary(&mut RngStream::new(42, 1), 4).unwrap();
        let b = random_unitary(&mut RngStream::new(42, 1), 4).unwrap();
        assert_eq!(a, b);

        assert!(random_unitary(&mut rng, 0).is_err());
    }

    #[test]
    fn unitary_preserves_norm() {
        let mut rng = RngStream::new(99, 4);
        for m in [2, 5, 16] {
            let u = random_unitary(&mut rng, m).unwrap();
            let v = gaussian_complex_matrix(&mut rng, m, 1, 1.0).unwrap();
            let uv = u.matmul(&v).unwrap();
            assert!((uv.fro_norm_sq().sqrt() - v.fro_norm_sq().sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn random_word_range() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..1000 {
            assert!(random_word(&mut rng, 5) < 32);
        }
        assert_eq!(random_word(&mut rng, 0), 0);
    }
}
