//! Form fields on a periodic grid: storage, the discrete exterior
//! derivative and its transpose, pointwise maps and reproducible
//! reductions.

use crate::dual::Dual;
use crate::error::{invalid, Result};
use crate::exterior::basis::Tables;
use crate::exterior::{dim, N};
use crate::grid::TorusGrid;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::sync::Arc;

/// A degree-p form at every node, node-major with axis 1 slowest.
#[derive(Debug, Clone)]
pub struct FormField<T = f64> {
    grid: Arc<TorusGrid>,
    degree: usize,
    values: Vec<T>,
}

/// Fixed-order pairwise sum; the split points depend only on the length,
/// so the result is independent of thread count.
pub fn pairwise_sum<T: Scalar>(v: &[T]) -> T {
    if v.len() <= 8 {
        return v.iter().copied().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

impl<T: Scalar> FormField<T> {
    pub fn zeros(grid: &Arc<TorusGrid>, degree: usize) -> Self {
        assert!(degree <= N);
        Self {
            grid: grid.clone(),
            degree,
            values: vec![T::zero(); grid.node_count() * dim(degree)],
        }
    }

    pub fn from_values(grid: &Arc<TorusGrid>, degree: usize, values: Vec<T>) -> Result<Self> {
        if degree > N || values.len() != grid.node_count() * dim(degree) {
            return Err(invalid("field storage does not match grid and degree"));
        }
        Ok(Self {
            grid: grid.clone(),
            degree,
            values,
        })
    }

    /// Same form at every node.
    pub fn constant(grid: &Arc<TorusGrid>, form: &crate::exterior::Form<T>) -> Self {
        let values = (0..grid.node_count()).flat_map(|_| form.coeffs().iter().copied()).collect();
        Self {
            grid: grid.clone(),
            degree: form.degree(),
            values,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }
    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }
    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }
    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    #[inline]
    pub fn node(&self, i: usize) -> &[T] {
        let d = dim(self.degree);
        &self.values[i * d..(i + 1) * d]
    }
    #[inline]
    pub fn node_mut(&mut self, i: usize) -> &mut [T] {
        let d = dim(self.degree);
        &mut self.values[i * d..(i + 1) * d]
    }

    pub fn node_form(&self, i: usize) -> crate::exterior::Form<T> {
        crate::exterior::Form::from_coeffs(self.degree, self.node(i).to_vec()).expect("consistent degree")
    }

    pub fn check_compatible(&self, o: &Self) -> Result<()> {
        if self.degree != o.degree || *self.grid != *o.grid {
            return Err(invalid("fields live on different grids or degrees"));
        }
        Ok(())
    }

    pub fn axpy(&mut self, a: T, x: &Self) {
        debug_assert!(self.check_compatible(x).is_ok());
        self.values.par_iter_mut().zip(x.values.par_iter()).for_each(|(y, x)| *y += a * *x);
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.axpy(T::one(), o);
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.axpy(-T::one(), o);
        r
    }

    pub fn scale(&self, c: T) -> Self {
        let mut r = self.clone();
        r.values.par_iter_mut().for_each(|v| *v *= c);
        r
    }

    /// Node-wise map into a field of degree `out_degree`.
    pub fn map_nodes<F>(&self, out_degree: usize, f: F) -> Self
    where
        F: Fn(usize, &[T], &mut [T]) + Sync,
    {
        let (di, dout) = (dim(self.degree), dim(out_degree));
        let mut out = Self::zeros(&self.grid, out_degree);
        out.values
            .par_chunks_mut(dout)
            .enumerate()
            .for_each(|(n, o)| f(n, &self.values[n * di..(n + 1) * di], o));
        out
    }

    /// Discrete exterior derivative: Σ_k e^k ∧ ∂_k with the grid stencil.
    pub fn d(&self) -> Result<Self> {
        let p = self.degree;
        if p >= N {
            return Err(invalid("d of a 7-form"));
        }
        let (dp, dq) = (dim(p), dim(p + 1));
        let grid = &self.grid;
        let tables = Tables::get();
        let axes = grid.active_axes();
        let mut out = Self::zeros(grid, p + 1);
        out.values.par_chunks_mut(dq).enumerate().for_each(|(n, o)| {
            for &k in &axes {
                let slots = tables.exterior(p, k);
                for &(off, w) in grid.weights(k) {
                    let m = grid.shift_table(k, off)[n] as usize;
                    let src = &self.values[m * dp..(m + 1) * dp];
                    for e in slots {
                        o[e.dst as usize] += src[e.src as usize].scale(w * e.sign);
                    }
                }
            }
        });
        Ok(out)
    }

    /// Transpose of `d` in coefficient space (degree p+1 → p).
    pub fn d_transpose(&self) -> Result<Self> {
        let q = self.degree;
        if q == 0 {
            return Err(invalid("transpose of d on 0-forms"));
        }
        let p = q - 1;
        let (dp, dq) = (dim(p), dim(q));
        let grid = &self.grid;
        let tables = Tables::get();
        let axes = grid.active_axes();
        let mut out = Self::zeros(grid, p);
        out.values.par_chunks_mut(dp).enumerate().for_each(|(n, o)| {
            for &k in &axes {
                let nk = grid.n()[k];
                let slots = tables.exterior(p, k);
                for &(off, w) in grid.weights(k) {
                    let m = grid.shift_table(k, (nk - off) % nk)[n] as usize;
                    let src = &self.values[m * dq..(m + 1) * dq];
                    for e in slots {
                        o[e.src as usize] += src[e.dst as usize].scale(w * e.sign);
                    }
                }
            }
        });
        Ok(out)
    }

    /// Euclidean coefficient dot product (no metric, no cell weight).
    pub fn coeff_dot(&self, o: &Self) -> T {
        let parts: Vec<T> = self
            .values
            .par_chunks(1024)
            .zip(o.values.par_chunks(1024))
            .map(|(a, b)| crate::linalg::dot(a, b))
            .collect();
        pairwise_sum(&parts)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.value().abs()).fold(0.0, f64::max)
    }

    pub fn primal(&self) -> FormField<f64> {
        FormField {
            grid: self.grid.clone(),
            degree: self.degree,
            values: self.values.iter().map(|v| v.value()).collect(),
        }
    }
}

impl FormField<f64> {
    /// Field sampled from a function of the node position.
    pub fn from_fn<F>(grid: &Arc<TorusGrid>, degree: usize, f: F) -> Self
    where
        F: Fn([f64; N]) -> Vec<f64> + Sync,
    {
        let d = dim(degree);
        let mut out = Self::zeros(grid, degree);
        out.values.par_chunks_mut(d).enumerate().for_each(|(n, o)| {
            let v = f(grid.position(n));
            o.copy_from_slice(&v[..d]);
        });
        out
    }

    pub fn lift<T: Scalar>(&self) -> FormField<T> {
        FormField {
            grid: self.grid.clone(),
            degree: self.degree,
            values: self.values.iter().map(|&v| T::from_f64(v)).collect(),
        }
    }

    /// Dual field with value `self` and tangent `dir`.
    pub fn with_tangent(&self, dir: &Self) -> FormField<Dual> {
        FormField {
            grid: self.grid.clone(),
            degree: self.degree,
            values: self.values.iter().zip(&dir.values).map(|(&v, &t)| Dual::new(v, t)).collect(),
        }
    }

    /// Largest coefficient of the field, used as a residual scale.
    pub fn norm_inf(&self) -> f64 {
        self.max_abs()
    }

    /// Coefficient-space Euclidean norm.
    pub fn coeff_norm(&self) -> f64 {
        self.coeff_dot(self).sqrt()
    }
}

impl FormField<Dual> {
    pub fn tangent(&self) -> FormField<f64> {
        FormField {
            grid: self.grid.clone(),
            degree: self.degree,
            values: self.values.iter().map(|v| v.dot).collect(),
        }
    }
}

/// Real-valued function on the grid (one value per node).
pub type ScalarField = FormField<f64>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::Form;
    use crate::rng::SeededRng;
    use std::f64::consts::TAU;

    fn grid(order: usize, n: usize) -> Arc<TorusGrid> {
        Arc::new(TorusGrid::new([n, n, 1, 1, 1, 1, 3], [TAU, 2.0, 1.0, 1.0, 1.0, 1.0, 1.5], order).unwrap())
    }

    fn random_field(g: &Arc<TorusGrid>, p: usize, seed: u64) -> FormField<f64> {
        let mut rng = SeededRng::new(seed);
        FormField::from_values(g, p, rng.normal_vec(g.node_count() * dim(p))).unwrap()
    }

    #[test]
    fn constant_field_is_closed() {
        let g = grid(4, 8);
        let f: FormField = FormField::constant(&g, &Form::basis(&[1, 3]));
        assert!(f.d().unwrap().max_abs() == 0.0);
    }

    #[test]
    fn d_squared_vanishes() {
        for order in [2, 4] {
            let g = grid(order, 8);
            for p in 0..=5 {
                let f = random_field(&g, p, 7 + p as u64);
                let dd = f.d().unwrap().d().unwrap();
                assert!(dd.max_abs() <= 1e-12 * (1.0 + f.max_abs()), "p={p}: {}", dd.max_abs());
            }
        }
    }

    #[test]
    fn transpose_is_adjoint_in_coefficients() {
        let g = grid(4, 6);
        for p in 0..=6 {
            let a = random_field(&g, p, 100 + p as u64);
            let b = random_field(&g, p + 1, 200 + p as u64);
            let lhs = a.d().unwrap().coeff_dot(&b);
            let rhs = a.coeff_dot(&b.d_transpose().unwrap());
            assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn derivative_of_trig_one_form_converges() {
        // f = sin(2πx₁/L₁) e² → (2π/L₁) cos(2πx₁/L₁) e^{12}
        for order in [2usize, 4] {
            let mut errs = Vec::new();
            for n in [8usize, 16, 32] {
                let g = Arc::new(TorusGrid::new([n, 1, 1, 1, 1, 1, 1], [2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], order).unwrap());
                let k = TAU / 2.0;
                let f = FormField::from_fn(&g, 1, |x| {
                    let mut v = vec![0.0; 7];
                    v[1] = (k * x[0]).sin();
                    v
                });
                let df = f.d().unwrap();
                let exact = FormField::from_fn(&g, 2, |x| {
                    let mut v = vec![0.0; 21];
                    v[0] = k * (k * x[0]).cos();
                    v
                });
                errs.push(df.sub(&exact).max_abs());
            }
            let rate = (errs[1] / errs[2]).log2();
            assert!((rate - order as f64).abs() < 0.2, "order {order}: rate {rate}");
        }
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v.clone()));
    }
}
