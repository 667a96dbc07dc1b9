//! SU(3) refinement of a G2 structure by a unit covector ξ.

use super::structure::G2Structure;
use crate::error::{invalid, Result};
use crate::exterior::{contract, inner, wedge, Form, MetricTensor, N};
use nalgebra::{DMatrix, DVector};

/// ω = ξ⌟Ω, ψ₊ = Ω − ω∧ξ, ψ₋ with ⋆Ω = ψ₋∧ξ + ½ω².
///
/// With contraction as the adjoint of the left wedge, ψ₋ = −ξ⌟⋆Ω.
#[derive(Debug, Clone)]
pub struct Su3Frame {
    pub xi: Form<f64>,
    pub omega2: Form<f64>,
    pub psi_plus: Form<f64>,
    pub psi_minus: Form<f64>,
}

/// Components of a 3-form under the SU(3) splitting:
/// ȧ(ω∧ξ+ψ₊) + ḃψ₋ + (X⌟ψ₋)∧ξ + (X⌟ω)∧ω + ċ(−4ω∧ξ+3ψ₊)
/// + (Y⌟ψ₋)∧ξ − (Y⌟ω)∧ω + β₈∧ξ + γ₁₂.
#[derive(Debug, Clone)]
pub struct Su3Components {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x: Form<f64>,
    pub y: Form<f64>,
    pub beta8: Form<f64>,
    pub gamma12: Form<f64>,
}

fn check_unit(xi: &Form<f64>, m: &MetricTensor<f64>) -> Result<()> {
    if xi.degree() != 1 {
        return Err(invalid("ξ must be a covector"));
    }
    let n = inner(xi, xi, m)?;
    if (n - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("ξ must have unit length, |ξ|² = {n}")));
    }
    Ok(())
}

pub fn su3_frame(s: &G2Structure, xi: &Form<f64>) -> Result<Su3Frame> {
    let m = s.metric();
    check_unit(xi, m)?;
    let omega = s.omega();
    let omega2 = contract(xi, &omega, m)?;
    let psi_plus = &omega - &wedge(&omega2, xi)?;
    let psi_minus = -&contract(xi, &s.theta(), m)?;
    Ok(Su3Frame {
        xi: xi.clone(),
        omega2,
        psi_plus,
        psi_minus,
    })
}

/// Orthonormal basis (under g) of covectors orthogonal to ξ.
fn perp_basis(xi: &Form<f64>, m: &MetricTensor<f64>) -> Vec<Form<f64>> {
    let mut basis: Vec<Form<f64>> = vec![xi.clone()];
    for k in 1..=N {
        let mut v = Form::basis(&[k]);
        for b in &basis {
            let c = inner(&v, b, m).unwrap();
            v = &v - &b.scale(c);
        }
        let n = inner(&v, &v, m).unwrap().sqrt();
        if n > 1e-6 {
            basis.push(v.scale(1.0 / n));
        }
        if basis.len() == N {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Least-squares coefficients of `target` against `columns` in the metric.
fn least_squares(columns: &[Form<f64>], target: &Form<f64>, m: &MetricTensor<f64>) -> Vec<f64> {
    let n = columns.len();
    let gram = DMatrix::from_fn(n, n, |i, j| inner(&columns[i], &columns[j], m).unwrap());
    let rhs = DVector::from_fn(n, |i, _| inner(&columns[i], target, m).unwrap());
    gram.cholesky().expect("independent columns").solve(&rhs).as_slice().to_vec()
}

fn combine(basis: &[Form<f64>], coeffs: &[f64]) -> Form<f64> {
    basis
        .iter()
        .zip(coeffs)
        .fold(Form::zero(1), |acc, (b, c)| &acc + &b.scale(*c))
}

pub fn su3_decompose(s: &G2Structure, xi: &Form<f64>, tdot: &Form<f64>) -> Result<Su3Components> {
    if tdot.degree() != 3 {
        return Err(invalid("su3_decompose needs a 3-form"));
    }
    let f = su3_frame(s, xi)?;
    let m = s.metric();
    let beta = contract(xi, tdot, m)?;
    let gamma = tdot - &wedge(&beta, xi)?;

    let s1 = inner(&beta, &f.omega2, m)? / 3.0;
    let s2 = inner(&gamma, &f.psi_plus, m)? / 4.0;
    let c = (s2 - s1) / 7.0;
    let a = s1 + 4.0 * c;
    let b = inner(&gamma, &f.psi_minus, m)? / 4.0;

    let perp = perp_basis(xi, m);
    let beta_cols: Vec<Form<f64>> = perp.iter().map(|v| contract(v, &f.psi_minus, m).unwrap()).collect();
    let gamma_cols: Vec<Form<f64>> = perp
        .iter()
        .map(|v| wedge(&contract(v, &f.omega2, m).unwrap(), &f.omega2).unwrap())
        .collect();
    let beta_rest = &beta - &f.omega2.scale(s1);
    let gamma_rest = &(&gamma - &f.psi_plus.scale(s2)) - &f.psi_minus.scale(b);
    let sum_coeffs = least_squares(&beta_cols, &beta_rest, m);
    let diff_coeffs = least_squares(&gamma_cols, &gamma_rest, m);
    let sum = combine(&perp, &sum_coeffs);
    let diff = combine(&perp, &diff_coeffs);
    let x = (&sum + &diff).scale(0.5);
    let y = (&sum - &diff).scale(0.5);
    let beta8 = &beta_rest - &contract(&sum, &f.psi_minus, m)?;
    let gamma12 = &gamma_rest - &wedge(&contract(&diff, &f.omega2, m)?, &f.omega2)?;
    Ok(Su3Components {
        a,
        b,
        c,
        x,
        y,
        beta8,
        gamma12,
    })
}

/// Reassembles a 3-form from its SU(3) components.
pub fn su3_reassemble(s: &G2Structure, xi: &Form<f64>, k: &Su3Components) -> Result<Form<f64>> {
    let f = su3_frame(s, xi)?;
    let m = s.metric();
    let wx = wedge(&f.omega2, xi)?;
    let mut out = (&wx + &f.psi_plus).scale(k.a);
    out = &out + &f.psi_minus.scale(k.b);
    out = &out + &(&wx.scale(-4.0) + &f.psi_plus.scale(3.0)).scale(k.c);
    let sum = &k.x + &k.y;
    let diff = &k.x - &k.y;
    out = &out + &wedge(&contract(&sum, &f.psi_minus, m)?, xi)?;
    out = &out + &wedge(&contract(&diff, &f.omega2, m)?, &f.omega2)?;
    out = &out + &wedge(&k.beta8, xi)?;
    Ok(&out + &k.gamma12)
}
