use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::DenseMatrix;
use crate::scalar::Scalar;

/// Seeded, platform-independent random stream (ChaCha8).
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream, e.g. one per layer or per trial.
    pub fn fork(&mut self, tag: u64) -> SeededRng {
        let s: u64 = self.inner.random();
        SeededRng::new(s ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.random_range(lo..=hi)
    }

    pub fn gaussian<T: Scalar>(&mut self, rows: usize, cols: usize) -> DenseMatrix<T> {
        DenseMatrix::from_fn(rows, cols, |_, _| T::of(self.normal()))
    }

    pub fn uniform_matrix<T: Scalar>(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> DenseMatrix<T> {
        DenseMatrix::from_fn(rows, cols, |_, _| T::of(lo + (hi - lo) * self.uniform()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_identical_streams() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        let xa: Vec<f64> = (0..100).map(|_| a.normal()).collect();
        let xb: Vec<f64> = (0..100).map(|_| b.normal()).collect();
        assert_eq!(xa, xb);
        let mut c = SeededRng::new(43);
        assert_ne!(xa[0], c.normal());
    }

    #[test]
    fn stream_is_pinned() {
        // Guards against silent changes in the generator or distribution.
        assert_eq!(SeededRng::new(7).uniform().to_bits(), 0x3fc4_32a9_9a11_eba0);
        assert_eq!(SeededRng::new(7).normal().to_bits(), 0xbfe8_cfd8_cced_03f8);
    }
}
