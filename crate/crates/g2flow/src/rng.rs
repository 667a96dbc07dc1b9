//! Seeded randomness for scenarios and test batteries.
//!
//! The generator is ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`), keyed
//! through `SeedableRng::seed_from_u64`. Uniform reals use the top 53 bits
//! of a `u64` draw; normals use Box–Muller. Identical seeds reproduce
//! identical streams on every platform.

use crate::exterior::{dim, Form, MetricTensor, N};
use crate::linalg::{matmul7, transpose7, Mat7};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SeededRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = std::f64::consts::TAU * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    pub fn form(&mut self, p: usize) -> Form<f64> {
        Form::from_coeffs(p, self.normal_vec(dim(p))).expect("valid degree")
    }

    /// I + spread·R with R standard normal, resampled until det > 0 and the
    /// condition number stays moderate.
    pub fn gl_plus(&mut self, spread: f64) -> Mat7<f64> {
        loop {
            let a: Mat7<f64> = std::array::from_fn(|i| {
                std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 } + spread * self.normal())
            });
            let m = nalgebra::SMatrix::<f64, N, N>::from_fn(|i, j| a[i][j]);
            let sv = m.singular_values();
            let cond = sv.max() / sv.min();
            if m.determinant() > 0.0 && cond < 20.0 {
                return a;
            }
        }
    }

    /// Random positive definite metric AᵀA.
    pub fn metric(&mut self, spread: f64) -> MetricTensor<f64> {
        let a = self.gl_plus(spread);
        MetricTensor::new(matmul7(&transpose7(&a), &a)).expect("AᵀA is positive definite")
    }
}
