//! A positive 3-form field with its pointwise G2 data, and the metric
//! operators built on it: Hodge star, both codifferentials, the Hodge
//! Laplacian and the weighted L² product.

use crate::error::{invalid, Error, Result};
use crate::exterior::{contract_into, hodge_into, inner_raw, wedge_acc, Form, N};
use crate::field::{pairwise_sum, FormField};
use crate::g2::PointStructure;
use crate::grid::TorusGrid;
use crate::linalg::matvec;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Debug, Clone)]
enum Points<T> {
    /// Constant form: one structure shared by every node.
    Uniform(Box<PointStructure<T>>),
    PerNode(Vec<PointStructure<T>>),
}

/// A 3-form field that is positive at every node, with cached pointwise
/// structures consistent with `omega`.
#[derive(Debug, Clone)]
pub struct StructureField<T = f64> {
    omega: FormField<T>,
    points: Points<T>,
}

impl<T: Scalar> StructureField<T> {
    /// Builds the pointwise structures; fails at the first node that is not
    /// positive.
    pub fn new(omega: FormField<T>) -> Result<Self> {
        if omega.degree() != 3 {
            return Err(invalid("a structure field needs a 3-form field"));
        }
        let n = omega.grid().node_count();
        let points: Vec<Result<PointStructure<T>>> = (0..n).into_par_iter().map(|i| PointStructure::new(omega.node(i))).collect();
        let mut out = Vec::with_capacity(n);
        for (node, p) in points.into_iter().enumerate() {
            match p {
                Ok(p) => out.push(p),
                Err(Error::NotPositive { signature }) => return Err(Error::PositivityLoss { node, signature }),
                Err(e) => return Err(e),
            }
        }
        Ok(Self {
            omega,
            points: Points::PerNode(out),
        })
    }

    /// The same positive form at every node.
    pub fn uniform(grid: &Arc<TorusGrid>, form: &Form<T>) -> Result<Self> {
        if form.degree() != 3 {
            return Err(invalid("a structure field needs a 3-form"));
        }
        let point = PointStructure::new(form.coeffs())?;
        Ok(Self {
            omega: FormField::constant(grid, form),
            points: Points::Uniform(Box::new(point)),
        })
    }

    #[inline]
    pub fn omega(&self) -> &FormField<T> {
        &self.omega
    }
    pub fn into_omega(self) -> FormField<T> {
        self.omega
    }
    #[inline]
    pub fn grid(&self) -> &Arc<TorusGrid> {
        self.omega.grid()
    }
    #[inline]
    pub fn point(&self, node: usize) -> &PointStructure<T> {
        match &self.points {
            Points::Uniform(p) => p,
            Points::PerNode(v) => &v[node],
        }
    }
    pub fn is_uniform(&self) -> bool {
        matches!(self.points, Points::Uniform(_))
    }

    fn check_grid(&self, f: &FormField<T>) -> Result<()> {
        if **f.grid() != **self.grid() {
            return Err(invalid("field and structure live on different grids"));
        }
        Ok(())
    }

    /// Θ = ⋆Ω as a 4-form field.
    pub fn theta(&self) -> FormField<T> {
        self.omega.map_nodes(4, |n, _, o| o.copy_from_slice(&self.point(n).theta))
    }

    /// Node-wise vol, the density of the induced volume form.
    pub fn vol_density(&self) -> Vec<T> {
        (0..self.grid().node_count()).map(|n| self.point(n).vol).collect()
    }

    pub fn hodge(&self, f: &FormField<T>) -> Result<FormField<T>> {
        self.check_grid(f)?;
        let p = f.degree();
        Ok(f.map_nodes(N - p, |n, a, o| hodge_into(a, p, &self.point(n).metric, o)))
    }

    /// Pointwise wedge of two fields.
    pub fn wedge(&self, a: &FormField<T>, b: &FormField<T>) -> Result<FormField<T>> {
        self.check_grid(a)?;
        self.check_grid(b)?;
        let (p, q) = (a.degree(), b.degree());
        if p + q > N {
            return Err(invalid("pointwise wedge exceeds degree 7"));
        }
        Ok(a.map_nodes(p + q, |n, x, o| wedge_acc(x, p, b.node(n), q, o)))
    }

    /// Pointwise metric contraction a ⌟ b.
    pub fn contract(&self, a: &FormField<T>, b: &FormField<T>) -> Result<FormField<T>> {
        self.check_grid(a)?;
        let (k, l) = (a.degree(), b.degree());
        if k > l {
            return Err(invalid("contraction degree exceeds target degree"));
        }
        Ok(a.map_nodes(l - k, |n, x, o| contract_into(x, k, b.node(n), l, &self.point(n).metric, o)))
    }

    /// Exact discrete adjoint of d for the weighted product: on a q-form β,
    /// δβ = vol⁻¹ · G_{q−1}⁻¹ · dᵀ(vol · G_q β).
    pub fn codiff_adjoint(&self, f: &FormField<T>) -> Result<FormField<T>> {
        self.check_grid(f)?;
        let q = f.degree();
        if q == 0 {
            return Err(invalid("codifferential of a 0-form"));
        }
        let weighted = f.map_nodes(q, |n, b, o| {
            let pt = self.point(n);
            matvec(pt.metric.gram(q), b, o);
            o.iter_mut().for_each(|v| *v *= pt.vol);
        });
        let dt = weighted.d_transpose()?;
        let p = q - 1;
        Ok(dt.map_nodes(p, |n, a, o| {
            let pt = self.point(n);
            matvec(pt.metric.lower(p), a, o);
            let s = T::one() / pt.vol;
            o.iter_mut().for_each(|v| *v *= s);
        }))
    }

    /// δ = (−1)^p ⋆ d ⋆ with the discrete d.
    pub fn codiff_analytic(&self, f: &FormField<T>) -> Result<FormField<T>> {
        let p = f.degree();
        if p == 0 {
            return Err(invalid("codifferential of a 0-form"));
        }
        let r = self.hodge(&self.hodge(f)?.d()?)?;
        Ok(if p % 2 == 1 { r.scale(-T::one()) } else { r })
    }

    /// Δ = dδ + δd with the adjoint codifferential.
    pub fn laplacian(&self, f: &FormField<T>) -> Result<FormField<T>> {
        let p = f.degree();
        let mut out = FormField::zeros(self.grid(), p);
        if p > 0 {
            out.axpy(T::one(), &self.codiff_adjoint(f)?.d()?);
        }
        if p < N {
            out.axpy(T::one(), &self.codiff_adjoint(&f.d()?)?);
        }
        Ok(out)
    }

    /// Σ_nodes ⟨a, b⟩_g · vol · cell volume.
    pub fn l2_inner(&self, a: &FormField<T>, b: &FormField<T>) -> Result<T> {
        self.check_grid(a)?;
        a.check_compatible(b)?;
        let p = a.degree();
        let terms: Vec<T> = (0..self.grid().node_count())
            .into_par_iter()
            .map(|n| {
                let pt = self.point(n);
                inner_raw(a.node(n), b.node(n), p, &pt.metric) * pt.vol
            })
            .collect();
        Ok(pairwise_sum(&terms).scale(self.grid().cell_volume()))
    }

    pub fn l2_norm_sq(&self, a: &FormField<T>) -> Result<T> {
        self.l2_inner(a, a)
    }

    /// ∫ vol, the Hitchin volume.
    pub fn hitchin(&self) -> T {
        pairwise_sum(&self.vol_density()).scale(self.grid().cell_volume())
    }

    pub fn p_apply(&self, f: &FormField<T>) -> Result<FormField<T>> {
        self.check_grid(f)?;
        if f.degree() != 3 {
            return Err(invalid("p acts on 3-forms"));
        }
        Ok(f.map_nodes(3, |n, t, o| self.point(n).p_apply(t, o)))
    }

    /// Pointwise [·]₇ on 3-forms.
    pub fn proj3_7(&self, f: &FormField<T>) -> Result<FormField<T>> {
        self.check_grid(f)?;
        if f.degree() != 3 {
            return Err(invalid("proj3_7 acts on 3-forms"));
        }
        Ok(f.map_nodes(3, |n, t, o| self.point(n).proj3_7(t, o)))
    }

    /// Pointwise [·]₇ on 2-forms: (t + ⋆(t∧Ω))/3.
    pub fn proj2_7(&self, f: &FormField<T>) -> Result<FormField<T>> {
        self.check_grid(f)?;
        if f.degree() != 2 {
            return Err(invalid("proj2_7 acts on 2-forms"));
        }
        Ok(f.map_nodes(2, |n, t, o| self.point(n).proj2_7(t, o)))
    }

    /// ‖dΩ‖ and ‖δΩ‖ in L².
    pub fn torsion_norms(&self) -> Result<(T, T)> {
        let d = self.omega.d()?;
        let delta = self.codiff_adjoint(&self.omega)?;
        Ok((self.l2_norm_sq(&d)?.sqrt(), self.l2_norm_sq(&delta)?.sqrt()))
    }

    /// Smallest eigenvalue of the induced metric over all nodes.
    pub fn min_metric_eigenvalue(&self) -> f64 {
        (0..self.grid().node_count())
            .map(|n| crate::linalg::sym_eigenvalues7(self.point(n).metric.g())[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest eigenvalue of g⁻¹ over all nodes.
    pub fn max_inverse_metric_eigenvalue(&self) -> f64 {
        if let Points::Uniform(p) = &self.points {
            return crate::linalg::sym_eigenvalues7(p.metric.inverse())[N - 1];
        }
        (0..self.grid().node_count())
            .map(|n| crate::linalg::sym_eigenvalues7(self.point(n).metric.inverse())[N - 1])
            .fold(0.0, f64::max)
    }

    pub fn primal(&self) -> Result<StructureField<f64>> {
        match &self.points {
            Points::Uniform(_) => {
                StructureField::uniform(self.grid(), &Form::from_coeffs(3, self.omega.node(0).iter().map(|v| v.value()).collect())?)
            }
            Points::PerNode(_) => StructureField::new(self.omega.primal()),
        }
    }
}

impl StructureField<f64> {
    /// The flat structure `form` (constant coefficients) on `grid`.
    pub fn flat(grid: &Arc<TorusGrid>, form: &Form<f64>) -> Result<Self> {
        Self::uniform(grid, form)
    }

    /// Structure of the same grid evaluated in dual numbers along `dir`.
    pub fn with_tangent(&self, dir: &FormField<f64>) -> Result<StructureField<crate::Dual>> {
        StructureField::new(self.omega.with_tangent(dir))
    }

    pub fn lift<T: Scalar>(&self) -> Result<StructureField<T>> {
        match &self.points {
            Points::Uniform(_) => StructureField::uniform(self.grid(), &self.omega.node_form(0).lift()),
            Points::PerNode(_) => StructureField::new(self.omega.lift()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::dim;
    use crate::g2::standard::normal_form;
    use crate::rng::SeededRng;
    use std::f64::consts::TAU;

    fn grid(n: usize) -> Arc<TorusGrid> {
        Arc::new(TorusGrid::new([n, n, 1, 1, 1, 1, 1], [TAU, TAU, 1.0, 1.0, 1.0, 1.0, 1.0], 4).unwrap())
    }

    fn perturbed(g: &Arc<TorusGrid>, eps: f64, seed: u64) -> StructureField {
        let mut rng = SeededRng::new(seed);
        let coeffs: Vec<[f64; 4]> = (0..35).map(|_| std::array::from_fn(|_| rng.normal())).collect();
        let base = normal_form();
        let f = FormField::from_fn(g, 3, |x| {
            (0..35)
                .map(|i| {
                    let c = coeffs[i];
                    base.coeffs()[i] + eps * (c[0] * x[0].sin() + c[1] * x[1].cos() + c[2] * (x[0] + x[1]).sin() + c[3])
                })
                .collect()
        });
        StructureField::new(f).unwrap()
    }

    #[test]
    fn flat_structure_is_torsion_free() {
        let s = StructureField::flat(&grid(8), &normal_form()).unwrap();
        let (d, delta) = s.torsion_norms().unwrap();
        assert!(d < 1e-13 && delta < 1e-13);
        let n = s.l2_norm_sq(s.omega()).unwrap();
        assert!((n - 7.0 * s.grid().total_volume()).abs() < 1e-10);
    }

    #[test]
    fn adjoint_codifferential_is_exact_adjoint() {
        let g = grid(6);
        let s = perturbed(&g, 0.05, 3);
        let mut rng = SeededRng::new(11);
        for p in 0..N {
            let a = FormField::from_values(&g, p, rng.normal_vec(g.node_count() * dim(p))).unwrap();
            let b = FormField::from_values(&g, p + 1, rng.normal_vec(g.node_count() * dim(p + 1))).unwrap();
            let lhs = s.l2_inner(&a.d().unwrap(), &b).unwrap();
            let rhs = s.l2_inner(&a, &s.codiff_adjoint(&b).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()), "p={p}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn codifferentials_agree_at_constant_metric() {
        let g = grid(6);
        let mut rng = SeededRng::new(5);
        let a = rng.gl_plus(0.3);
        let s = StructureField::flat(&g, &crate::exterior::pullback(&normal_form(), &a)).unwrap();
        for p in 1..=N {
            let f = FormField::from_values(&g, p, rng.normal_vec(g.node_count() * dim(p))).unwrap();
            let x = s.codiff_adjoint(&f).unwrap();
            let y = s.codiff_analytic(&f).unwrap();
            assert!(x.sub(&y).max_abs() < 1e-11 * (1.0 + f.max_abs()), "p={p}");
        }
    }

    #[test]
    fn codifferentials_coincide_at_varying_metric() {
        // Antisymmetric stencils make ⋆d⋆ the weighted transpose of d, so
        // the two constructions agree to roundoff on any positive field.
        let g = grid(8);
        let s = perturbed(&g, 0.1, 9);
        for p in 1..=N {
            let f = FormField::from_fn(&g, p, |x| (0..dim(p)).map(|i| ((i + 1) as f64 * 0.1 + x[0]).sin() * x[1].cos()).collect());
            let gap = s.codiff_adjoint(&f).unwrap().sub(&s.codiff_analytic(&f).unwrap()).max_abs();
            assert!(gap < 1e-12, "p={p}: {gap}");
        }
    }

    #[test]
    fn laplacian_eigenvalue_of_trig_mode() {
        let g = grid(8);
        let s = StructureField::flat(&g, &normal_form()).unwrap();
        let idx = crate::exterior::basis::Tables::get().rank(0b0001110);
        let f = FormField::from_fn(&g, 3, |x| {
            let mut v = vec![0.0; 35];
            v[idx] = x[0].sin();
            v
        });
        let lf = s.laplacian(&f).unwrap();
        let k = g.multiplier(0, 1);
        assert!(lf.sub(&f.scale(k * k)).max_abs() < 1e-12);
        assert!((k - 1.0).abs() < 2e-2);
    }
}
