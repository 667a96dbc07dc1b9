//! Dirichlet energy D = ½∫(|dΩ|² + |dΘ|²)vol, Hitchin volume, the exact
//! negative L² gradient Q of the discrete energy, and the Laplacian-flow
//! right-hand side.
//!
//! The discrete energy is the midpoint quadrature of its integrand with the
//! grid's d. Its L² gradient splits as
//!
//! ∇D = δdΩ + p⋆δdΘ + q,
//!
//! where q is the pointwise derivative of ½vol(|A|²+|B|²) with A = dΩ and
//! B = dΘ held fixed, converted to an L² gradient. It accounts for how the
//! induced metric and volume move with Ω.

use crate::calculus::StructureField;
use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::exterior::basis::Tables;
use crate::exterior::{inner_raw, N};
use crate::field::FormField;
use crate::g2::{cubic_terms, PointStructure};
use crate::linalg::{dot, matvec, Mat7};
use crate::scalar::Scalar;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyReport {
    pub dirichlet: f64,
    /// ‖dΩ‖²
    pub torsion_d: f64,
    /// ‖δΩ‖²
    pub torsion_delta: f64,
    /// ∫ vol
    pub hitchin: f64,
    /// |‖dΘ‖² − ‖δΩ‖²| relative to D; ⋆ is an isometry so this is roundoff.
    pub theta_form_gap: f64,
}

/// How the pointwise metric-variation term of the gradient is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum GradientMethod {
    /// Chain rule through B ↦ g = det(B)^{−1/9}B written out in closed form.
    #[default]
    ClosedForm,
    /// Forward-mode dual numbers through the metric and Hodge pipeline, one
    /// pass per coefficient.
    Dual,
}

/// D of a structure field, generic so that dual numbers give directional
/// derivatives.
pub fn dirichlet<T: Scalar>(s: &StructureField<T>) -> Result<T> {
    let a = s.omega().d()?;
    let b = s.theta().d()?;
    Ok((s.l2_norm_sq(&a)? + s.l2_norm_sq(&b)?).scale(0.5))
}

pub fn energy(s: &StructureField) -> Result<EnergyReport> {
    let torsion_d = s.l2_norm_sq(&s.omega().d()?)?;
    let dtheta = s.l2_norm_sq(&s.theta().d()?)?;
    let torsion_delta = s.l2_norm_sq(&s.codiff_adjoint(s.omega())?)?;
    let dirichlet = 0.5 * (torsion_d + dtheta);
    Ok(EnergyReport {
        dirichlet,
        torsion_d,
        torsion_delta,
        hitchin: s.hitchin(),
        theta_form_gap: (dtheta - torsion_delta).abs() / (f64::MIN_POSITIVE + dirichlet),
    })
}

/// ∂/∂Ω of ½vol(|a|²+|b|²) at fixed 4-form a and 5-form b, in coefficient
/// space.
///
/// With M = g⁻¹ and S_kl = ⟨ι_k a, ι_l a⟩ + ⟨ι_k b, ι_l b⟩, the derivative
/// with respect to g is H = ¼vol(|a|²+|b|²)M − ½vol·MSM. Pulling back
/// through g = κB with κ = det(B)^{−1/9} gives K = H − (1/9)tr(HB)B⁻¹,
/// and the result is κ Σ_ij K_ij ∂B_ij/∂Ω.
pub fn metric_variation<T: Scalar>(pt: &PointStructure<T>, a: &[T], b: &[T]) -> [T; 35] {
    let tables = Tables::get();
    let metric = &pt.metric;
    let m = metric.inverse();
    let mut s: Mat7<T> = [[T::zero(); N]; N];
    accumulate_slot_gram(tables, a, 4, metric.gram(3), &mut s);
    accumulate_slot_gram(tables, b, 5, metric.gram(4), &mut s);
    let norms = inner_raw(a, a, 4, metric) + inner_raw(b, b, 5, metric);
    let vol = pt.vol;
    // ms = M S
    let ms: Mat7<T> = std::array::from_fn(|i| std::array::from_fn(|j| (0..N).map(|k| m[i][k] * s[k][j]).sum()));
    let quarter = (vol * norms).scale(0.25);
    let half = vol.scale(0.5);
    let h: Mat7<T> = std::array::from_fn(|i| {
        std::array::from_fn(|j| quarter * m[i][j] - half * (0..N).map(|k| ms[i][k] * m[k][j]).sum::<T>())
    });
    let tr_hb: T = (0..N).flat_map(|i| (0..N).map(move |j| (i, j))).map(|(i, j)| h[i][j] * pt.b[j][i]).sum();
    let c = tr_hb.scale(1.0 / 9.0);
    let kappa = T::one() / vol;
    let k: Mat7<T> = std::array::from_fn(|i| std::array::from_fn(|j| (h[i][j] - c * pt.b_inv[i][j]) * kappa));
    let om = &pt.omega;
    let mut e = [T::zero(); 35];
    for t in cubic_terms() {
        let (i, j) = (t.i as usize, t.j as usize);
        let w = if i == j { t.coef } else { 2.0 * t.coef };
        let kij = k[i][j].scale(w);
        let (ia, ib, ic) = (t.a as usize, t.b as usize, t.c as usize);
        e[ia] += kij * om[ib] * om[ic];
        e[ib] += kij * om[ia] * om[ic];
        e[ic] += kij * om[ia] * om[ib];
    }
    e
}

/// s_kl += ⟨ι_k f, ι_l f⟩ for a p-form f, with `gram` the Gram matrix on
/// (p−1)-forms.
fn accumulate_slot_gram<T: Scalar>(tables: &Tables, f: &[T], p: usize, gram: &[T], s: &mut Mat7<T>) {
    let n = crate::exterior::dim(p - 1);
    let mut slots = [[T::zero(); 35]; N];
    for (k, row) in slots.iter_mut().enumerate() {
        for e in tables.interior(p, k) {
            row[e.dst as usize] += f[e.src as usize].scale(e.sign);
        }
    }
    let mut raised = [T::zero(); 35];
    for l in 0..N {
        matvec(gram, &slots[l][..n], &mut raised[..n]);
        for k in 0..=l {
            let v = dot(&slots[k][..n], &raised[..n]);
            s[k][l] += v;
            if k != l {
                s[l][k] += v;
            }
        }
    }
}

/// Dual-number evaluation of the same derivative: one forward pass of
/// Ω ↦ (g, vol) per coefficient direction.
pub fn metric_variation_dual(omega: &[f64], a: &[f64], b: &[f64]) -> Result<[f64; 35]> {
    let a: Vec<Dual> = a.iter().map(|&v| Dual::constant(v)).collect();
    let b: Vec<Dual> = b.iter().map(|&v| Dual::constant(v)).collect();
    let mut e = [0.0; 35];
    for (k, ek) in e.iter_mut().enumerate() {
        let om: Vec<Dual> = omega.iter().enumerate().map(|(i, &v)| Dual::new(v, if i == k { 1.0 } else { 0.0 })).collect();
        let pt = PointStructure::new(&om)?;
        let f = (pt.vol * (inner_raw(&a, &a, 4, &pt.metric) + inner_raw(&b, &b, 5, &pt.metric))).scale(0.5);
        if !f.dot.is_finite() {
            return Err(Error::Precondition("dual-number pipeline produced a non-finite derivative".into()));
        }
        *ek = f.dot;
    }
    Ok(e)
}

/// Q = −∇D with the closed-form metric variation; generic over the scalar.
pub fn gradient_q<T: Scalar>(s: &StructureField<T>) -> Result<FormField<T>> {
    let a = s.omega().d()?;
    let b = s.theta().d()?;
    let q = metric_term(s, &a, &b, |pt, x, y| Ok(metric_variation(pt, x, y)))?;
    assemble_gradient(s, &a, &b, q)
}

/// Q = −∇D with the chosen evaluation of the metric variation.
pub fn gradient_q_with(s: &StructureField, method: GradientMethod) -> Result<FormField> {
    match method {
        GradientMethod::ClosedForm => gradient_q(s),
        GradientMethod::Dual => {
            let a = s.omega().d()?;
            let b = s.theta().d()?;
            let q = metric_term(s, &a, &b, |pt, x, y| metric_variation_dual(&pt.omega, x, y))?;
            assemble_gradient(s, &a, &b, q)
        }
    }
}

/// L² gradient of Σ cell·F_n: lower₃(g)·e / vol at every node.
fn metric_term<T: Scalar, F>(s: &StructureField<T>, a: &FormField<T>, b: &FormField<T>, variation: F) -> Result<FormField<T>>
where
    F: Fn(&PointStructure<T>, &[T], &[T]) -> Result<[T; 35]> + Sync,
{
    let failure = std::sync::Mutex::new(None);
    let out = s.omega().map_nodes(3, |n, _, o| {
        let pt = s.point(n);
        match variation(pt, a.node(n), b.node(n)) {
            Ok(e) => {
                matvec(pt.metric.lower(3), &e, o);
                let inv = T::one() / pt.vol;
                o.iter_mut().for_each(|v| *v *= inv);
            }
            Err(err) => *failure.lock().unwrap() = Some(err),
        }
    });
    match failure.into_inner().unwrap() {
        Some(err) => Err(err),
        None => Ok(out),
    }
}

fn assemble_gradient<T: Scalar>(s: &StructureField<T>, a: &FormField<T>, b: &FormField<T>, q: FormField<T>) -> Result<FormField<T>> {
    let delta_a = s.codiff_adjoint(a)?;
    let p_star_delta_b = s.p_apply(&s.hodge(&s.codiff_adjoint(b)?)?)?;
    let mut grad = delta_a;
    grad.axpy(T::one(), &p_star_delta_b);
    grad.axpy(T::one(), &q);
    Ok(grad.scale(-T::one()))
}

/// Q without the metric-variation term: −δdΩ − p⋆δdΘ. At a torsion-free
/// background its linearisation equals that of Q.
pub fn gradient_principal<T: Scalar>(s: &StructureField<T>) -> Result<FormField<T>> {
    let a = s.omega().d()?;
    let b = s.theta().d()?;
    let zero = FormField::zeros(s.grid(), 3);
    assemble_gradient(s, &a, &b, zero)
}

/// Δ_Ω Ω = dδΩ + δdΩ with the analytic codifferential.
pub fn laplacian_flow_rhs<T: Scalar>(s: &StructureField<T>) -> Result<FormField<T>> {
    let omega = s.omega();
    let mut out = s.codiff_analytic(omega)?.d()?;
    out.axpy(T::one(), &s.codiff_analytic(&omega.d()?)?);
    Ok(out)
}

/// ‖dṫ‖² + ‖d⋆pṫ‖² at a torsion-free background.
pub fn second_variation(background: &StructureField, tdot: &FormField) -> Result<f64> {
    let (d, delta) = background.torsion_norms()?;
    let scale = background.l2_norm_sq(background.omega())?.sqrt();
    if d + delta > 1e-10 * (1.0 + scale) {
        return Err(Error::Precondition("second variation needs a torsion-free background".into()));
    }
    let dt = tdot.d()?;
    let dtheta = background.hodge(&background.p_apply(tdot)?)?.d()?;
    Ok(background.l2_norm_sq(&dt)? + background.l2_norm_sq(&dtheta)?)
}

/// −dD(Ω + hΩ̇)/dh at h = 0 by dual numbers.
pub fn energy_slope(s: &StructureField, dir: &FormField) -> Result<f64> {
    let sd = s.with_tangent(dir)?;
    Ok(-dirichlet(&sd)?.dot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::Form;
    use crate::g2::standard::normal_form;
    use crate::grid::TorusGrid;
    use crate::rng::SeededRng;
    use std::f64::consts::TAU;
    use std::sync::Arc;

    fn grid(n: usize, order: usize) -> Arc<TorusGrid> {
        Arc::new(TorusGrid::new([n, n, 1, 1, 1, 1, 1], [TAU, TAU, 1.0, 1.0, 1.0, 1.0, 1.0], order).unwrap())
    }

    fn trig(g: &Arc<TorusGrid>, base: &Form, eps: f64, seed: u64) -> FormField {
        let mut rng = SeededRng::new(seed);
        let c: Vec<[f64; 3]> = (0..35).map(|_| std::array::from_fn(|_| rng.normal())).collect();
        FormField::from_fn(g, 3, |x| {
            (0..35)
                .map(|i| base.coeffs()[i] + eps * (c[i][0] * x[0].sin() + c[i][1] * x[1].cos() + c[i][2] * (x[0] + x[1]).sin()))
                .collect()
        })
    }

    #[test]
    fn closed_form_variation_matches_dual_numbers() {
        let mut rng = SeededRng::new(21);
        for _ in 0..10 {
            let a = rng.gl_plus(0.3);
            let om = crate::exterior::pullback(&normal_form(), &a);
            let pt = PointStructure::new(om.coeffs()).unwrap();
            let x = rng.normal_vec(35);
            let y = rng.normal_vec(21);
            let e1 = metric_variation(&pt, &x, &y);
            let e2 = metric_variation_dual(om.coeffs(), &x, &y).unwrap();
            let scale = e2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for k in 0..35 {
                assert!((e1[k] - e2[k]).abs() < 1e-11 * (1.0 + scale), "{k}: {} vs {}", e1[k], e2[k]);
            }
        }
    }

    #[test]
    fn flat_background_is_critical() {
        let g = grid(8, 4);
        let s = StructureField::flat(&g, &normal_form()).unwrap();
        let r = energy(&s).unwrap();
        assert_eq!(r.dirichlet, 0.0);
        assert!(gradient_q(&s).unwrap().max_abs() < 1e-14);
        assert!(laplacian_flow_rhs(&s).unwrap().max_abs() < 1e-14);
        assert!((r.hitchin - g.total_volume()).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_energy_slope() {
        let g = grid(8, 4);
        let s = StructureField::new(trig(&g, &normal_form(), 0.05, 3)).unwrap();
        let q = gradient_q(&s).unwrap();
        let mut rng = SeededRng::new(5);
        let dir = FormField::from_values(&g, 3, rng.normal_vec(g.node_count() * 35)).unwrap();
        let lhs = s.l2_inner(&q, &dir).unwrap();
        let rhs = energy_slope(&s, &dir).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn dual_method_agrees_with_closed_form() {
        let g = grid(4, 2);
        let s = StructureField::new(trig(&g, &normal_form(), 0.1, 8)).unwrap();
        let a = gradient_q(&s).unwrap();
        let b = gradient_q_with(&s, GradientMethod::Dual).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-11 * (1.0 + a.max_abs()));
    }

    #[test]
    fn theta_and_codifferential_forms_agree() {
        let g = grid(8, 2);
        let s = StructureField::new(trig(&g, &normal_form(), 0.05, 4)).unwrap();
        assert!(energy(&s).unwrap().theta_form_gap < 1e-10);
    }

    #[test]
    fn homogeneity() {
        let g = grid(8, 4);
        let f = trig(&g, &normal_form(), 0.05, 6);
        let s = StructureField::new(f.clone()).unwrap();
        let lam: f64 = 1.7;
        let sl = StructureField::new(f.scale(lam)).unwrap();
        let (e, el) = (energy(&s).unwrap(), energy(&sl).unwrap());
        assert!((el.dirichlet / e.dirichlet - lam.powf(5.0 / 3.0)).abs() < 1e-12 * lam.powf(5.0 / 3.0));
        assert!((el.hitchin / e.hitchin - lam.powf(7.0 / 3.0)).abs() < 1e-12 * lam.powf(7.0 / 3.0));
    }

    #[test]
    fn second_variation_vanishes_on_constants_and_background() {
        let g = grid(8, 4);
        let s = StructureField::flat(&g, &normal_form()).unwrap();
        let mut rng = SeededRng::new(2);
        let c = FormField::constant(&g, &rng.form(3));
        assert!(second_variation(&s, &c).unwrap().abs() < 1e-24);
        assert!(second_variation(&s, s.omega()).unwrap().abs() < 1e-24);
        let t = trig(&g, &Form::zero(3), 1.0, 3);
        assert!(second_variation(&s, &t).unwrap() > 0.0);
    }
}
