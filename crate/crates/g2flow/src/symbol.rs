//! Principal symbols of the flow operators at a point, in real form, with
//! classification of their symmetric parts.
//!
//! All matrices act on coefficient vectors in the lexicographic basis.
//! Definiteness and singular values are taken after conjugating by the
//! Cholesky factor of the induced Gram matrix, so they refer to the
//! metric inner product rather than the coefficient one.

use crate::error::{invalid, Result};
use crate::exterior::{contract_into, dim, interior_vector, wedge_acc, Form, N};
use crate::g2::{su3_decompose, su3_frame, G2Structure, PointStructure};
use crate::linalg::inner_raw_gram;
use crate::rng::SeededRng;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Relative cut for near-zero singular values.
pub const KERNEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Definiteness {
    Positive,
    PositiveSemi,
    Negative,
    NegativeSemi,
    Indefinite,
    /// Rectangular symbols have no symmetric part.
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub definiteness: Definiteness,
    pub kernel_dim: usize,
    pub sym_min: Option<f64>,
    pub sym_max: Option<f64>,
    pub sigma_max: f64,
}

/// A symbol at (Ω, ξ): 35×35, or 35×7 for the orbit map.
#[derive(Debug, Clone)]
pub struct SymbolMatrix {
    pub matrix: DMatrix<f64>,
    pub xi_norm: f64,
    pub class: Classification,
    /// Same map in metric-orthonormal coordinates.
    weighted: DMatrix<f64>,
}

impl SymbolMatrix {
    fn build(matrix: DMatrix<f64>, xi_norm: f64, r_out: &DMatrix<f64>, r_in: &DMatrix<f64>) -> Self {
        let r_in_inv = r_in.clone().try_inverse().expect("Cholesky factor is invertible");
        let weighted = r_out * &matrix * r_in_inv;
        let class = classify(&weighted);
        Self {
            matrix,
            xi_norm,
            class,
            weighted,
        }
    }

    /// Eigenvalues of the metric-symmetric part, ascending.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.weighted)
    }

    /// Orthonormal (under g) basis of the kernel, as columns in the
    /// metric-orthonormal coordinates.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        // the kernel_dim lowest eigenvectors of WᵀW; the count itself comes
        // from the singular values, which do not square the roundoff
        let eig = (self.weighted.transpose() * &self.weighted).symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let cols: Vec<DVector<f64>> = order[..self.class.kernel_dim]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        let n = self.weighted.ncols();
        let mut out = DMatrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            out.set_column(j, c);
        }
        out
    }

    /// The map in metric-orthonormal coordinates.
    pub fn weighted(&self) -> &DMatrix<f64> {
        &self.weighted
    }
}

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn classify(weighted: &DMatrix<f64>) -> Classification {
    let sv = weighted.singular_values();
    let sigma_max = sv.max();
    let kernel_dim = sv.iter().filter(|s| **s < KERNEL_TOL * sigma_max).count();
    if weighted.nrows() != weighted.ncols() {
        return Classification {
            definiteness: Definiteness::NotApplicable,
            kernel_dim,
            sym_min: None,
            sym_max: None,
            sigma_max,
        };
    }
    let e = symmetric_eigenvalues(weighted);
    let (lo, hi) = (e[0], e[e.len() - 1]);
    let tol = KERNEL_TOL * sigma_max;
    let definiteness = if lo > tol {
        Definiteness::Positive
    } else if hi < -tol {
        Definiteness::Negative
    } else if lo >= -tol {
        Definiteness::PositiveSemi
    } else if hi <= tol {
        Definiteness::NegativeSemi
    } else {
        Definiteness::Indefinite
    };
    Classification {
        definiteness,
        kernel_dim,
        sym_min: Some(lo),
        sym_max: Some(hi),
        sigma_max,
    }
}

/// Upper Cholesky factor R with RᵀR = the packed Gram matrix.
fn chol_upper(gram: &[f64], n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_row_slice(n, n, gram);
    m.cholesky().expect("Gram matrix is positive definite").l().transpose()
}

/// Pointwise algebra at a fixed (Ω, ξ).
struct Frame<'a> {
    pt: &'a PointStructure<f64>,
    xi: [f64; N],
}

impl<'a> Frame<'a> {
    fn new(s: &'a G2Structure, xi: &Form<f64>) -> Result<Self> {
        if xi.degree() != 1 {
            return Err(invalid("ξ must be a covector"));
        }
        if xi.coeffs().iter().all(|c| *c == 0.0) {
            return Err(invalid("symbol at ξ = 0"));
        }
        Ok(Self {
            pt: s.point(),
            xi: std::array::from_fn(|i| xi.coeffs()[i]),
        })
    }

    fn xi_norm(&self) -> f64 {
        inner_raw_gram(&self.xi, &self.xi, self.pt.metric.gram(1)).sqrt()
    }

    fn wedge(&self, t: &[f64], p: usize) -> Vec<f64> {
        let mut o = vec![0.0; dim(p + 1)];
        wedge_acc(&self.xi, 1, t, p, &mut o);
        o
    }

    fn contract(&self, t: &[f64], p: usize) -> Vec<f64> {
        let mut o = vec![0.0; dim(p - 1)];
        contract_into(&self.xi, 1, t, p, &self.pt.metric, &mut o);
        o
    }

    fn p(&self, t: &[f64]) -> Vec<f64> {
        let mut o = vec![0.0; 35];
        self.pt.p_apply(t, &mut o);
        o
    }

    /// −ξ⌟(ξ∧t) − p(ξ∧(ξ⌟pt)).
    fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let a = self.contract(&self.wedge(t, 3), 4);
        let b = self.p(&self.wedge(&self.contract(&self.p(t), 3), 2));
        a.iter().zip(&b).map(|(x, y)| -x - y).collect()
    }

    /// −ξ∧(((ξ⌟t)⌟Ω)⌟Ω).
    fn gauge(&self, t: &[f64]) -> Vec<f64> {
        let m = &self.pt.metric;
        let beta = self.contract(t, 3);
        let mut v = [0.0; N];
        contract_into(&beta, 2, &self.pt.omega, 3, m, &mut v);
        let mut w = [0.0; 21];
        contract_into(&v, 1, &self.pt.omega, 3, m, &mut w);
        self.wedge(&w, 2).iter().map(|x| -x).collect()
    }

    /// |ξ|²t + ξ∧(ξ⌟([t]₁/3 − 2[t]₂₇)).
    fn laplacian_flow(&self, t: &[f64]) -> Vec<f64> {
        let mut t1 = [0.0; 35];
        let mut t7 = [0.0; 35];
        self.pt.proj3_1(t, &mut t1);
        self.pt.proj3_7(t, &mut t7);
        let mix: Vec<f64> = (0..35).map(|i| t1[i] / 3.0 - 2.0 * (t[i] - t1[i] - t7[i])).collect();
        let n2 = self.xi_norm().powi(2);
        let w = self.wedge(&self.contract(&mix, 3), 2);
        (0..35).map(|i| n2 * t[i] + w[i]).collect()
    }

    /// ξ∧(v⌟Ω) for a vector v.
    fn orbit(&self, v: &[f64]) -> Vec<f64> {
        let mut w = [0.0; 21];
        interior_vector(v, &self.pt.omega, 3, &mut w);
        self.wedge(&w, 2)
    }

    fn matrix(&self, cols: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(35, cols);
        let mut e = vec![0.0; cols];
        for j in 0..cols {
            e[j] = 1.0;
            m.set_column(j, &DVector::from_vec(f(&e)));
            e[j] = 0.0;
        }
        m
    }

    fn square(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> SymbolMatrix {
        let r = chol_upper(self.pt.metric.gram(3), 35);
        SymbolMatrix::build(self.matrix(35, f), self.xi_norm(), &r, &r)
    }
}

/// σ(D_ΩQ)(ξ)t = −ξ⌟(ξ∧t) − p(ξ∧(ξ⌟pt)).
pub fn symbol_gradient(s: &G2Structure, xi: &Form<f64>) -> Result<SymbolMatrix> {
    let f = Frame::new(s, xi)?;
    Ok(f.square(|t| f.gradient(t)))
}

/// Symbol of the gauge term alone: −ξ∧((ξ⌟t)⌟Ω⌟Ω).
pub fn symbol_gauge(s: &G2Structure, xi: &Form<f64>) -> Result<SymbolMatrix> {
    let f = Frame::new(s, xi)?;
    Ok(f.square(|t| f.gauge(t)))
}

/// σ(D_Ω̄Q̃) = σ(D_ΩQ) + the gauge symbol.
pub fn symbol_deturck(s: &G2Structure, xi: &Form<f64>) -> Result<SymbolMatrix> {
    let f = Frame::new(s, xi)?;
    Ok(f.square(|t| {
        let a = f.gradient(t);
        let b = f.gauge(t);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }))
}

/// Symbol of the Laplacian flow: |ξ|²t + ξ∧(ξ⌟([t]₁/3 − 2[t]₂₇)).
pub fn symbol_laplacian_flow(s: &G2Structure, xi: &Form<f64>) -> Result<SymbolMatrix> {
    let f = Frame::new(s, xi)?;
    Ok(f.square(|t| f.laplacian_flow(t)))
}

/// σ(λ*)(ξ)v = ξ∧(v⌟Ω̄), a 35×7 map from vectors.
pub fn symbol_orbit_map(s: &G2Structure, xi: &Form<f64>) -> Result<SymbolMatrix> {
    let f = Frame::new(s, xi)?;
    let r_out = chol_upper(f.pt.metric.gram(3), 35);
    // vectors carry g itself
    let g = f.pt.metric.g();
    let flat: Vec<f64> = g.iter().flatten().copied().collect();
    let r_in = chol_upper(&flat, N);
    Ok(SymbolMatrix::build(f.matrix(N, |v| f.orbit(v)), f.xi_norm(), &r_out, &r_in))
}

/// Metric quadratic form ⟨σt, t⟩.
pub fn quadratic_value(s: &G2Structure, sym: &SymbolMatrix, t: &Form<f64>) -> f64 {
    let v = &sym.matrix * DVector::from_column_slice(t.coeffs());
    inner_raw_gram(v.as_slice(), t.coeffs(), s.metric().gram(3))
}

/// Largest principal angle between two column spans of equal dimension,
/// both given in the same orthonormal coordinates. Computed from the sine,
/// ‖(I − P_a)Q_b‖₂, which stays accurate for small angles.
pub fn principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() || a.ncols() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let resid = &qb - &qa * (qa.transpose() * &qb);
    resid.singular_values().max().min(1.0).asin()
}

/// Worst values over a battery of random (Ω, ξ) samples.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SymbolBattery {
    pub samples: usize,
    /// Largest eigenvalue of sym σ(D_ΩQ); should be ≤ 0.
    pub gradient_sym_max: f64,
    /// Samples where σ(D_ΩQ) does not have exactly 7 near-zero singular values.
    pub gradient_kernel_misses: usize,
    pub kernel_angle_max: f64,
    /// Least eigenvalue of −sym σ(D_Ω̄Q̃) at |ξ| = 1.
    pub deturck_min: f64,
    /// max |σ(gauge)t − (−3ξ∧[ξ⌟t]₇)| / |t| over random t.
    pub gauge_formula_gap: f64,
    /// Largest ⟨σF β₈∧ξ, β₈∧ξ⟩ / |β₈|²; should be ≈ −1.
    pub laplacian_beta8_max: f64,
    /// Smallest ⟨σF ψ₋, ψ₋⟩; should be ≈ 4.
    pub laplacian_psi_min: f64,
    pub laplacian_indefinite: usize,
    pub orbit_rank_misses: usize,
    /// max |σ(D_ΩQ)∘σ(λ*)| relative to the factor norms.
    pub orbit_image_gap: f64,
}

/// Orthonormal basis of ξ^⊥ under the covector Gram matrix (modified
/// Gram–Schmidt against ξ, dropping the dependent direction).
fn perp_basis(xi: &Form<f64>, gram1: &[f64]) -> Vec<Form<f64>> {
    let ip = |a: &Form<f64>, b: &Form<f64>| inner_raw_gram(a.coeffs(), b.coeffs(), gram1);
    let mut basis = vec![xi.scale(1.0 / ip(xi, xi).sqrt())];
    for k in 1..=N {
        let mut v = Form::basis(&[k]);
        for _ in 0..2 {
            for b in &basis {
                v = &v - &b.scale(ip(&v, b));
            }
        }
        let n = ip(&v, &v).sqrt();
        if n > 0.1 && basis.len() < N {
            basis.push(v.scale(1.0 / n));
        }
    }
    basis.split_off(1)
}

fn random_structure(rng: &mut SeededRng) -> G2Structure {
    let a = rng.gl_plus(0.3);
    let form = crate::exterior::pullback(&crate::g2::standard::normal_form(), &a);
    G2Structure::new(&form).expect("pullbacks of the normal form are positive")
}

/// Random unit covector under the metric of `s`.
fn random_unit_covector(rng: &mut SeededRng, s: &G2Structure) -> Form<f64> {
    let v = rng.form(1);
    let n = inner_raw_gram(v.coeffs(), v.coeffs(), s.metric().gram(1)).sqrt();
    v.scale(1.0 / n)
}

/// Runs the symbol identities on `samples` seeded random (Ω, ξ) pairs.
pub fn symbol_battery(seed: u64, samples: usize) -> Result<SymbolBattery> {
    let mut rng = SeededRng::new(seed);
    let mut out = SymbolBattery {
        samples,
        gradient_sym_max: f64::NEG_INFINITY,
        deturck_min: f64::INFINITY,
        laplacian_beta8_max: f64::NEG_INFINITY,
        laplacian_psi_min: f64::INFINITY,
        ..Default::default()
    };
    for _ in 0..samples {
        let s = random_structure(&mut rng);
        let xi = random_unit_covector(&mut rng, &s);
        let m = s.metric();
        let r3 = chol_upper(m.gram(3), 35);

        let q = symbol_gradient(&s, &xi)?;
        out.gradient_sym_max = out.gradient_sym_max.max(q.class.sym_max.unwrap_or(f64::NAN));
        if q.class.kernel_dim != 7 {
            out.gradient_kernel_misses += 1;
        }
        let frame = su3_frame(&s, &xi)?;
        let mut span = DMatrix::zeros(35, N);
        let omega_xi = crate::exterior::wedge(&frame.omega2, &xi)?;
        span.set_column(0, &(&r3 * DVector::from_column_slice(omega_xi.coeffs())));
        for (j, v) in perp_basis(&xi, m.gram(1)).iter().enumerate() {
            let t = crate::exterior::wedge(&crate::exterior::contract(v, &frame.psi_minus, m)?, &xi)?;
            span.set_column(j + 1, &(&r3 * DVector::from_column_slice(t.coeffs())));
        }
        let ker = q.kernel_basis();
        if ker.ncols() == 7 {
            out.kernel_angle_max = out.kernel_angle_max.max(principal_angle(&ker, &span));
        } else {
            out.kernel_angle_max = std::f64::consts::FRAC_PI_2;
        }

        let dt = symbol_deturck(&s, &xi)?;
        out.deturck_min = out.deturck_min.min(-dt.class.sym_max.unwrap_or(f64::NAN));

        let gauge = symbol_gauge(&s, &xi)?;
        let f = Frame::new(&s, &xi)?;
        let t = rng.form(3);
        let lhs = &gauge.matrix * DVector::from_column_slice(t.coeffs());
        let beta = f.contract(t.coeffs(), 3);
        let mut b7 = [0.0; 21];
        f.pt.proj2_7(&beta, &mut b7);
        let rhs: Vec<f64> = f.wedge(&b7, 2).iter().map(|x| -3.0 * x).collect();
        let gap = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let tn = t.coeff_norm();
        out.gauge_formula_gap = out.gauge_formula_gap.max(gap / tn);

        let lf = symbol_laplacian_flow(&s, &xi)?;
        if lf.class.definiteness == Definiteness::Indefinite {
            out.laplacian_indefinite += 1;
        }
        let comp = su3_decompose(&s, &xi, &rng.form(3))?;
        let b8 = crate::exterior::wedge(&comp.beta8, &xi)?;
        let b8n = inner_raw_gram(comp.beta8.coeffs(), comp.beta8.coeffs(), m.gram(2));
        if b8n > 1e-12 {
            out.laplacian_beta8_max = out.laplacian_beta8_max.max(quadratic_value(&s, &lf, &b8) / b8n);
        }
        out.laplacian_psi_min = out.laplacian_psi_min.min(quadratic_value(&s, &lf, &frame.psi_minus));

        let orbit = symbol_orbit_map(&s, &xi)?;
        if orbit.class.kernel_dim != 0 {
            out.orbit_rank_misses += 1;
        }
        let comp_norm = (q.weighted() * orbit.weighted()).norm() / (q.weighted().norm() * orbit.weighted().norm());
        out.orbit_image_gap = out.orbit_image_gap.max(comp_norm);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_xi() -> Form<f64> {
        Form::basis(&[7])
    }

    #[test]
    fn battery_holds_on_random_frames() {
        let b = symbol_battery(11, 60).unwrap();
        println!("{b:#?}");
        assert!(b.gradient_sym_max <= 1e-9);
        assert_eq!(b.gradient_kernel_misses, 0);
        assert!(b.kernel_angle_max <= 1e-6);
        assert!(b.deturck_min >= 1.0 - 1e-9);
        assert!(b.gauge_formula_gap <= 1e-10);
        assert!(b.laplacian_beta8_max <= -0.9);
        assert!(b.laplacian_psi_min >= 3.9);
        assert_eq!(b.laplacian_indefinite, b.samples);
        assert_eq!(b.orbit_rank_misses, 0);
        assert!(b.orbit_image_gap <= 1e-10);
    }

    #[test]
    fn homogeneous_in_xi() {
        let s = G2Structure::standard();
        let xi = &standard_xi() + &Form::basis(&[3]).scale(0.3);
        let c = 1.7;
        let a = symbol_deturck(&s, &xi).unwrap().matrix;
        let b = symbol_deturck(&s, &xi.scale(c)).unwrap().matrix;
        assert!((b - a * c * c).amax() < 1e-12);
        let a = symbol_orbit_map(&s, &xi).unwrap().matrix;
        let b = symbol_orbit_map(&s, &xi.scale(-c)).unwrap().matrix;
        assert!((b + a * c).amax() < 1e-12);
    }

    #[test]
    fn rejects_zero_covector() {
        let s = G2Structure::standard();
        assert!(symbol_gradient(&s, &Form::zero(1)).is_err());
    }

    #[test]
    fn gradient_quadratic_form_is_minus_sum_of_squares() {
        let s = G2Structure::standard();
        let xi = standard_xi();
        let q = symbol_gradient(&s, &xi).unwrap();
        let mut rng = SeededRng::new(3);
        let t = rng.form(3);
        let m = s.metric();
        let w = crate::exterior::wedge(&xi, &t).unwrap();
        let c = crate::exterior::contract(&xi, &s.p_apply(&t).unwrap(), m).unwrap();
        let expect = -(crate::exterior::inner(&w, &w, m).unwrap() + crate::exterior::inner(&c, &c, m).unwrap());
        assert!((quadratic_value(&s, &q, &t) - expect).abs() < 1e-12);
    }

    #[test]
    fn equivariant_under_frame_change() {
        let mut rng = SeededRng::new(5);
        let a = rng.gl_plus(0.3);
        let s0 = G2Structure::standard();
        let xi0 = &standard_xi() + &Form::basis(&[1]).scale(0.4);
        let s1 = G2Structure::new(&crate::exterior::pullback(&s0.omega(), &a)).unwrap();
        let xi1 = crate::exterior::pullback(&xi0, &a);
        let e0 = symbol_deturck(&s0, &xi0).unwrap().sym_eigenvalues();
        let e1 = symbol_deturck(&s1, &xi1).unwrap().sym_eigenvalues();
        let gap = e0.iter().zip(&e1).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-9, "{gap}");
    }
}
