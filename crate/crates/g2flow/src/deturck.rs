//! The DeTurck gauge: vector fields on the grid, the discrete Lie
//! derivative, X_Ω̄(Ω) = −(δ_Ω̄Ω)⌟Ω̄ dualised, and Q̃ = Q + L_{X(Ω)}Ω.

use crate::calculus::StructureField;
use crate::dual::Dual;
use crate::energy::gradient_q;
use crate::error::{invalid, Result};
use crate::exterior::{dim, interior_vector, N};
use crate::field::FormField;
use crate::grid::TorusGrid;
use crate::linalg::matvec;
use crate::scalar::Scalar;
use std::sync::Arc;

/// A vector field: components X^k in the coordinate frame e_k at every node.
/// Stored as a degree-1 field so the grid plumbing is shared, but never
/// mixed with covector fields.
#[derive(Debug, Clone)]
pub struct VectorField<T = f64>(FormField<T>);

impl<T: Scalar> VectorField<T> {
    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        Self(FormField::zeros(grid, 1))
    }

    pub fn from_components(c: FormField<T>) -> Result<Self> {
        if c.degree() != 1 {
            return Err(invalid("vector field components need 7 slots per node"));
        }
        Ok(Self(c))
    }

    pub fn components(&self) -> &FormField<T> {
        &self.0
    }

    pub fn into_components(self) -> FormField<T> {
        self.0
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        self.0.grid()
    }

    pub fn node(&self, n: usize) -> &[T] {
        self.0.node(n)
    }

    /// Pointwise X ⌟ f (plain interior product, no metric).
    pub fn interior(&self, f: &FormField<T>) -> Result<FormField<T>> {
        if **self.grid() != **f.grid() {
            return Err(invalid("vector field and form live on different grids"));
        }
        let p = f.degree();
        if p == 0 {
            return Ok(FormField::zeros(f.grid(), 0));
        }
        Ok(f.map_nodes(p - 1, |n, a, o| interior_vector(self.0.node(n), a, p, o)))
    }
}

impl VectorField<f64> {
    /// The same vector at every node.
    pub fn constant(grid: &Arc<TorusGrid>, v: [f64; N]) -> Self {
        Self(FormField::constant(grid, &crate::Form::from_coeffs(1, v.to_vec()).expect("7 components")))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

/// L_X f = X⌟df + d(X⌟f) with the discrete d.
pub fn lie_derivative<T: Scalar>(x: &VectorField<T>, f: &FormField<T>) -> Result<FormField<T>> {
    let p = f.degree();
    let mut out = if p < N {
        x.interior(&f.d()?)?
    } else {
        FormField::zeros(f.grid(), p)
    };
    if p > 0 {
        out.axpy(T::one(), &x.interior(f)?.d()?);
    }
    Ok(out)
}

/// X_Ω̄(f) = −♯((δ_Ω̄ f)⌟Ω̄) for a 3-form field f.
pub fn deturck_vector_field<T: Scalar>(omega_bar: &StructureField<T>, f: &FormField<T>) -> Result<VectorField<T>> {
    if f.degree() != 3 {
        return Err(invalid("the DeTurck field is defined on 3-forms"));
    }
    let beta = omega_bar.codiff_adjoint(f)?;
    let w = omega_bar.contract(&beta, omega_bar.omega())?;
    let x = w.map_nodes(1, |n, a, o| {
        matvec(omega_bar.point(n).metric.inverse().as_flattened(), a, o);
        o.iter_mut().for_each(|v| *v = -*v);
    });
    VectorField::from_components(x)
}

/// Q̃_Ω̄(Ω) = Q(Ω) + L_{X_Ω̄(Ω)}Ω.
pub fn q_tilde<T: Scalar>(omega_bar: &StructureField<T>, s: &StructureField<T>) -> Result<FormField<T>> {
    let x = deturck_vector_field(omega_bar, s.omega())?;
    let mut q = gradient_q(s)?;
    q.axpy(T::one(), &lie_derivative(&x, s.omega())?);
    Ok(q)
}

/// Directional derivative of Q̃ at `s` along `dir`, by dual numbers.
pub fn q_tilde_jvp(omega_bar: &StructureField, s: &StructureField, dir: &FormField) -> Result<FormField> {
    let bar: StructureField<Dual> = omega_bar.lift()?;
    Ok(q_tilde(&bar, &s.with_tangent(dir)?)?.tangent())
}

/// R(εw) = Q̃(Ω′ + εw) − Q̃(Ω′) − ε·DQ̃_{Ω′}(w). At a slice point Q̃(Ω′) = 0,
/// so this is the second-order remainder of the expansion about Ω′.
pub fn remainder(omega_bar: &StructureField, omega_prime: &StructureField, w: &FormField, eps: f64) -> Result<FormField> {
    let base = q_tilde(omega_bar, omega_prime)?;
    if eps == 0.0 {
        return Ok(FormField::zeros(w.grid(), 3));
    }
    let mut moved = omega_prime.omega().clone();
    moved.axpy(eps, w);
    let mut r = q_tilde(omega_bar, &StructureField::new(moved)?)?;
    r.axpy(-1.0, &base);
    r.axpy(-eps, &q_tilde_jvp(omega_bar, omega_prime, w)?);
    Ok(r)
}

/// Number of scalar unknowns of a vector field on `grid`.
pub fn vector_dim(grid: &TorusGrid) -> usize {
    dim(1) * grid.node_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2::standard::normal_form;
    use crate::rng::SeededRng;
    use std::f64::consts::TAU;

    fn grid(n: usize, order: usize) -> Arc<TorusGrid> {
        Arc::new(TorusGrid::new([n, n, 1, 1, 1, 1, 1], [TAU, TAU, 1.0, 1.0, 1.0, 1.0, 1.0], order).unwrap())
    }

    fn trig3(g: &Arc<TorusGrid>, seed: u64) -> FormField {
        let mut rng = SeededRng::new(seed);
        let c: Vec<[f64; 3]> = (0..35).map(|_| std::array::from_fn(|_| rng.normal())).collect();
        FormField::from_fn(g, 3, |x| {
            (0..35).map(|i| c[i][0] * x[0].sin() + c[i][1] * x[1].cos() + c[i][2] * (x[0] + x[1]).sin()).collect()
        })
    }

    #[test]
    fn deturck_field_vanishes_on_background_and_constants() {
        let g = grid(8, 2);
        let bar = StructureField::flat(&g, &normal_form()).unwrap();
        let x = deturck_vector_field(&bar, bar.omega()).unwrap();
        assert!(x.max_abs() < 1e-13);
        let mut rng = SeededRng::new(2);
        let c = FormField::constant(&g, &rng.form(3));
        assert!(deturck_vector_field(&bar, &c).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn deturck_field_vanishes_when_codifferential_is_in_fourteen() {
        // pointwise form: β ∈ Λ²₁₄ has β⌟Ω̄ = 0
        let g = grid(4, 2);
        let bar = StructureField::flat(&g, &normal_form()).unwrap();
        let mut rng = SeededRng::new(9);
        let beta = FormField::constant(&g, &rng.form(2));
        let b7 = bar.proj2_7(&beta).unwrap();
        let b14 = beta.sub(&b7);
        let w = bar.contract(&b14, bar.omega()).unwrap();
        assert!(w.max_abs() < 1e-13);
    }

    #[test]
    fn gauge_term_is_minus_three_d_of_seven_part() {
        // ι_{X(f)}Ω̄ = −3[δf]₇ by the contraction identity
        let g = grid(8, 4);
        let bar = StructureField::flat(&g, &normal_form()).unwrap();
        let f = trig3(&g, 4);
        let x = deturck_vector_field(&bar, &f).unwrap();
        let lhs = x.interior(bar.omega()).unwrap();
        let rhs = bar.proj2_7(&bar.codiff_adjoint(&f).unwrap()).unwrap().scale(-3.0);
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }

    #[test]
    fn lie_derivative_trivial_cases() {
        let g = grid(6, 2);
        let f = trig3(&g, 1);
        assert!(lie_derivative(&VectorField::zeros(&g), &f).unwrap().max_abs() == 0.0);
        let c = FormField::constant(&g, &normal_form());
        let x = VectorField::constant(&g, [0.3, -1.0, 0.0, 2.0, 0.0, 0.0, 0.5]);
        assert!(lie_derivative(&x, &c).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn lie_derivative_along_translation_converges() {
        // constant X: L_X f = X^a ∂_a f
        let v = [0.7, -0.4, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut rng = SeededRng::new(6);
        let c: Vec<[f64; 2]> = (0..35).map(|_| std::array::from_fn(|_| rng.normal())).collect();
        let err = |n: usize, order: usize| {
            let g = grid(n, order);
            let f = FormField::from_fn(&g, 3, |x| (0..35).map(|i| c[i][0] * x[0].sin() + c[i][1] * (x[0] - x[1]).cos()).collect());
            let exact = FormField::from_fn(&g, 3, |x| {
                (0..35)
                    .map(|i| {
                        c[i][0] * v[0] * x[0].cos() - c[i][1] * (x[0] - x[1]).sin() * (v[0] - v[1])
                    })
                    .collect()
            });
            let l = lie_derivative(&VectorField::constant(&g, v), &f).unwrap();
            l.sub(&exact).max_abs()
        };
        for order in [2, 4] {
            let rate = (err(8, order) / err(16, order)).log2();
            assert!((rate - order as f64).abs() < 0.5, "order {order}: rate {rate}");
        }
    }

    #[test]
    fn q_tilde_vanishes_at_background_and_on_slice() {
        let g = grid(6, 2);
        let bar = StructureField::flat(&g, &normal_form()).unwrap();
        assert!(q_tilde(&bar, &bar).unwrap().max_abs() < 1e-12);
        // constant perturbations are torsion-free and gauge-fixed
        let mut rng = SeededRng::new(8);
        let c = &normal_form() + &rng.form(3).scale(0.05);
        let s = StructureField::flat(&g, &c).unwrap();
        let qt = q_tilde(&bar, &s).unwrap();
        let q = gradient_q(&s).unwrap();
        assert!(qt.max_abs() < 1e-12 && q.max_abs() < 1e-12);
    }

    #[test]
    fn q_tilde_differs_from_q_by_the_gauge_term() {
        let g = grid(6, 2);
        let bar = StructureField::flat(&g, &normal_form()).unwrap();
        let mut om = bar.omega().clone();
        om.axpy(0.02, &trig3(&g, 3));
        let s = StructureField::new(om).unwrap();
        let gap = q_tilde(&bar, &s).unwrap().sub(&gradient_q(&s).unwrap()).max_abs();
        assert!(gap > 1e-4);
    }

    #[test]
    fn remainder_is_quadratic() {
        let g = grid(6, 2);
        let bar = StructureField::flat(&g, &normal_form()).unwrap();
        let w = trig3(&g, 12);
        assert!(remainder(&bar, &bar, &w, 0.0).unwrap().max_abs() == 0.0);
        let norm = |eps: f64| remainder(&bar, &bar, &w, eps).unwrap().coeff_norm();
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let ratio = norm(eps) / norm(eps / 2.0);
            assert!((ratio - 4.0).abs() < 0.4, "eps {eps}: ratio {ratio}");
        }
    }

    #[test]
    fn jvp_matches_central_difference() {
        let g = grid(6, 2);
        let bar = StructureField::flat(&g, &normal_form()).unwrap();
        let mut om = bar.omega().clone();
        om.axpy(0.05, &trig3(&g, 5));
        let s = StructureField::new(om.clone()).unwrap();
        let dir = trig3(&g, 6);
        let jvp = q_tilde_jvp(&bar, &s, &dir).unwrap();
        let h = 1e-5;
        let at = |c: f64| {
            let mut m = om.clone();
            m.axpy(c, &dir);
            q_tilde(&bar, &StructureField::new(m).unwrap()).unwrap()
        };
        let fd = at(h).sub(&at(-h)).scale(0.5 / h);
        assert!(jvp.sub(&fd).max_abs() < 1e-6 * (1.0 + jvp.max_abs()));
    }
}
