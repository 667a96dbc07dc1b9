use super::basis::{dim, N};
use crate::error::{invalid, Result};
use crate::linalg::{compound_pair, det_inv7, identity7, sym_eigenvalues7, Mat7};
use crate::scalar::Scalar;

/// A positive definite metric on R⁷ with its induced inner products on
/// every Λ^p.
///
/// `gram(p)` is the p-th compound of g⁻¹ (inner product of p-forms) and
/// `lower(p)` the p-th compound of g (its inverse).
#[derive(Debug, Clone)]
pub struct MetricTensor<T = f64> {
    g: Mat7<T>,
    inv: Mat7<T>,
    vol_scale: T,
    gram: [Vec<T>; 8],
    lower: [Vec<T>; 8],
}

impl<T: Scalar> MetricTensor<T> {
    pub fn identity() -> Self {
        let id = identity7::<T>();
        Self::from_parts(id, id, T::one())
    }

    /// Validates symmetry and positive definiteness.
    pub fn new(g: Mat7<T>) -> Result<Self> {
        for i in 0..N {
            for j in 0..i {
                let (a, b) = (g[i][j].value(), g[j][i].value());
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(invalid("metric is not symmetric"));
                }
            }
        }
        if sym_eigenvalues7(&g)[0] <= 0.0 {
            return Err(invalid("metric is not positive definite"));
        }
        let (det, inv) = det_inv7(&g).ok_or_else(|| invalid("metric is singular"))?;
        Ok(Self::from_parts(g, inv, det))
    }

    /// Trusted constructor from g, g⁻¹ and det g.
    pub(crate) fn from_parts(g: Mat7<T>, inv: Mat7<T>, det_g: T) -> Self {
        let (lower, gram) = compound_pair(&g, &inv, det_g);
        Self {
            g,
            inv,
            vol_scale: det_g.sqrt(),
            gram,
            lower,
        }
    }

    #[inline]
    pub fn g(&self) -> &Mat7<T> {
        &self.g
    }

    #[inline]
    pub fn inverse(&self) -> &Mat7<T> {
        &self.inv
    }

    /// √det g; the volume form is `vol_scale · e^{1…7}`.
    #[inline]
    pub fn vol_scale(&self) -> T {
        self.vol_scale
    }

    /// Inner product matrix on Λ^p (row-major, C(7,p)²).
    #[inline]
    pub fn gram(&self, p: usize) -> &[T] {
        &self.gram[p]
    }

    /// Inverse of `gram(p)`.
    #[inline]
    pub fn lower(&self, p: usize) -> &[T] {
        &self.lower[p]
    }

    pub fn gram_dim(p: usize) -> usize {
        dim(p)
    }

    pub fn values(&self) -> MetricTensor<f64> {
        let v = |m: &Mat7<T>| -> Mat7<f64> { std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].value())) };
        let (g, inv) = (v(&self.g), v(&self.inv));
        let det = self.vol_scale.value() * self.vol_scale.value();
        MetricTensor::from_parts(g, inv, det)
    }
}

impl MetricTensor<f64> {
    pub fn lift<T: Scalar>(&self) -> MetricTensor<T> {
        let l = |m: &Mat7<f64>| -> Mat7<T> { std::array::from_fn(|i| std::array::from_fn(|j| T::from_f64(m[i][j]))) };
        MetricTensor::from_parts(l(&self.g), l(&self.inv), T::from_f64(self.vol_scale * self.vol_scale))
    }
}
