use super::basis::{dim, Tables, N};
use super::form::Form;
use super::metric::MetricTensor;
use crate::error::{invalid, Result};
use crate::linalg::matvec;
use crate::scalar::Scalar;

/// out += a ∧ b for coefficient slices of degrees p and q.
#[inline]
pub fn wedge_acc<T: Scalar>(a: &[T], p: usize, b: &[T], q: usize, out: &mut [T]) {
    for e in Tables::get().wedge(p, q) {
        out[e.c as usize] += (a[e.a as usize] * b[e.b as usize]).scale(e.sign);
    }
}

/// out += (ι_A b) for an already-raised k-vector A and an l-form b: the
/// plain interior product, (ι_A b)_J = Σ_I A^I b_{I∪J} · sign(e^I∧e^J).
#[inline]
pub fn interior_acc<T: Scalar>(araised: &[T], k: usize, b: &[T], l: usize, out: &mut [T]) {
    for e in Tables::get().wedge(k, l - k) {
        out[e.b as usize] += (araised[e.a as usize] * b[e.c as usize]).scale(e.sign);
    }
}

/// Plain interior product by a vector (components v^k in the frame e_k).
pub fn interior_vector<T: Scalar>(v: &[T], b: &[T], l: usize, out: &mut [T]) {
    interior_acc(v, 1, b, l, out)
}

/// out = ⋆a for a p-form under `m`.
#[inline]
pub fn hodge_into<T: Scalar>(a: &[T], p: usize, m: &MetricTensor<T>, out: &mut [T]) {
    let n = dim(p);
    let mut raised = [T::zero(); 35];
    matvec(m.gram(p), a, &mut raised[..n]);
    let vol = m.vol_scale();
    for e in Tables::get().complement(p) {
        out[e.dst as usize] = (raised[e.src as usize] * vol).scale(e.sign);
    }
}

#[inline]
pub fn inner_raw<T: Scalar>(a: &[T], b: &[T], p: usize, m: &MetricTensor<T>) -> T {
    let n = dim(p);
    let g = m.gram(p);
    let mut s = T::zero();
    for i in 0..n {
        let mut r = T::zero();
        for j in 0..n {
            r += g[i * n + j] * b[j];
        }
        s += a[i] * r;
    }
    s
}

/// out = a ⌟ b (metric contraction), degrees k ≤ l.
pub fn contract_into<T: Scalar>(a: &[T], k: usize, b: &[T], l: usize, m: &MetricTensor<T>, out: &mut [T]) {
    let mut raised = [T::zero(); 35];
    matvec(m.gram(k), a, &mut raised[..dim(k)]);
    out.iter_mut().for_each(|x| *x = T::zero());
    interior_acc(&raised[..dim(k)], k, b, l, out);
}

/// Exterior product; errors if the degrees sum past 7.
pub fn wedge<T: Scalar>(a: &Form<T>, b: &Form<T>) -> Result<Form<T>> {
    let (p, q) = (a.degree(), b.degree());
    if p + q > N {
        return Err(invalid(format!("wedge of degrees {p} and {q} exceeds 7")));
    }
    let mut out = Form::zero(p + q);
    wedge_acc(a.coeffs(), p, b.coeffs(), q, out.coeffs_mut());
    Ok(out)
}

/// Metric contraction a ⌟ b, the adjoint of a ∧ (·): ⟨a⌟b, c⟩ = ⟨b, a∧c⟩.
pub fn contract<T: Scalar>(a: &Form<T>, b: &Form<T>, m: &MetricTensor<T>) -> Result<Form<T>> {
    let (k, l) = (a.degree(), b.degree());
    if k > l {
        return Err(invalid(format!("cannot contract degree {k} into degree {l}")));
    }
    let mut out = Form::zero(l - k);
    contract_into(a.coeffs(), k, b.coeffs(), l, m, out.coeffs_mut());
    Ok(out)
}

pub fn inner<T: Scalar>(a: &Form<T>, b: &Form<T>, m: &MetricTensor<T>) -> Result<T> {
    if a.degree() != b.degree() {
        return Err(invalid("inner product of forms of different degree"));
    }
    Ok(inner_raw(a.coeffs(), b.coeffs(), a.degree(), m))
}

/// Hodge star with α ∧ ⋆β = ⟨α, β⟩ vol.
pub fn hodge<T: Scalar>(a: &Form<T>, m: &MetricTensor<T>) -> Form<T> {
    let p = a.degree();
    let mut out = Form::zero(N - p);
    hodge_into(a.coeffs(), p, m, out.coeffs_mut());
    out
}

/// Plain interior product ι_v b by a vector v.
pub fn interior<T: Scalar>(v: &[T; N], b: &Form<T>) -> Result<Form<T>> {
    let l = b.degree();
    if l == 0 {
        return Err(invalid("interior product of a 0-form"));
    }
    let mut out = Form::zero(l - 1);
    interior_vector(v, b.coeffs(), l, out.coeffs_mut());
    Ok(out)
}

/// Top-degree coefficient of a 7-form.
pub fn top_coeff<T: Scalar>(a: &Form<T>) -> T {
    assert_eq!(a.degree(), N);
    a.coeffs()[0]
}

/// Pullback A*a of a p-form by the linear map A (A*e^a = Σ_i A_{ai} e^i).
pub fn pullback<T: Scalar>(a: &Form<T>, mat: &crate::linalg::Mat7<T>) -> Form<T> {
    let p = a.degree();
    let n = dim(p);
    let (det, inv) = crate::linalg::det_inv7(mat).expect("pullback by a singular map");
    let c = &crate::linalg::all_compounds(mat, &inv, det)[p];
    let mut out = Form::zero(p);
    for (j, o) in out.coeffs_mut().iter_mut().enumerate() {
        let mut s = T::zero();
        for i in 0..n {
            s += c[i * n + j] * a.coeffs()[i];
        }
        *o = s;
    }
    out
}
