//! Pointwise nonlinear G2 data derived from a 3-form, generic over the
//! scalar type so that dual numbers propagate through it.

use crate::error::{Error, Result, Signature};
use crate::exterior::basis::{merge_sign, Tables, N};
use crate::exterior::{hodge_into, inner_raw, MetricTensor};
use crate::linalg::{det_inv7, Mat7};
use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::sync::OnceLock;

/// One monomial of the cubic map Ω ↦ B: B_ij += coef · Ω_a Ω_b Ω_c.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CubicTerm {
    pub i: u8,
    pub j: u8,
    pub a: u16,
    pub b: u16,
    pub c: u16,
    pub coef: f64,
}

/// Monomials of B(u,v)·e^{1…7} = (1/6)(ι_uΩ)∧(ι_vΩ)∧Ω for i ≤ j.
pub(crate) fn cubic_terms() -> &'static [CubicTerm] {
    static TERMS: OnceLock<Vec<CubicTerm>> = OnceLock::new();
    TERMS.get_or_init(|| {
        let t = Tables::get();
        let m3 = t.masks(3);
        let mut acc: BTreeMap<(u8, u8, u16, u16, u16), f64> = BTreeMap::new();
        for i in 0..N {
            for j in i..N {
                for ia in t.interior(3, i) {
                    let ma = t.masks(2)[ia.dst as usize];
                    for jb in t.interior(3, j) {
                        let mb = t.masks(2)[jb.dst as usize];
                        if ma & mb != 0 {
                            continue;
                        }
                        let mab = ma | mb;
                        let mc = 0x7f ^ mab;
                        let c = t.rank(mc) as u16;
                        debug_assert_eq!(m3[c as usize], mc);
                        let coef = ia.sign * jb.sign * merge_sign(ma, mb) * merge_sign(mab, mc) / 6.0;
                        let mut key = [ia.src, jb.src, c];
                        key.sort_unstable();
                        *acc.entry((i as u8, j as u8, key[0], key[1], key[2])).or_insert(0.0) += coef;
                    }
                }
            }
        }
        acc.into_iter()
            .filter(|(_, v)| v.abs() > 1e-14)
            .map(|((i, j, a, b, c), coef)| CubicTerm { i, j, a, b, c, coef })
            .collect()
    })
}

/// The symmetric bilinear form B of a 3-form (values of the cubic map).
pub fn bilinear_form<T: Scalar>(omega: &[T]) -> Mat7<T> {
    let mut b = [[T::zero(); N]; N];
    for t in cubic_terms() {
        let v = (omega[t.a as usize] * omega[t.b as usize] * omega[t.c as usize]).scale(t.coef);
        b[t.i as usize][t.j as usize] += v;
    }
    for i in 0..N {
        for j in 0..i {
            b[i][j] = b[j][i];
        }
    }
    b
}

/// Signature of a symmetric matrix with zero band 1e−10·(Σ|λ|)/7.
pub fn signature(eigs: &[f64; N]) -> Signature {
    let band = 1e-10 * eigs.iter().map(|e| e.abs()).sum::<f64>() / N as f64;
    Signature {
        positive: eigs.iter().filter(|&&e| e > band).count(),
        negative: eigs.iter().filter(|&&e| e < -band).count(),
        zero: eigs.iter().filter(|&&e| e.abs() <= band).count(),
    }
}

/// Positivity of B under the scale-invariant threshold
/// λ_min(B) > 1e−10 · tr(B)/7. Returns the signature of B on failure.
pub fn check_positive<T: Scalar>(b: &Mat7<T>) -> std::result::Result<(), Signature> {
    let tr: f64 = (0..N).map(|i| b[i][i].value()).sum();
    if tr > 0.0 && crate::linalg::exceeds_shift7(b, 1e-10 * tr / N as f64) {
        Ok(())
    } else {
        Err(signature(&crate::linalg::sym_eigenvalues7(b)))
    }
}

/// Pointwise structure of a positive 3-form: metric, volume, Θ and the
/// spanning vectors of Λ³₇.
#[derive(Debug, Clone)]
pub struct PointStructure<T> {
    pub omega: [T; 35],
    /// Bilinear form B with g = (det B)^{−1/9} B.
    pub b: Mat7<T>,
    pub b_inv: Mat7<T>,
    pub det_b: T,
    pub metric: MetricTensor<T>,
    /// vol = √det g = (det B)^{1/9}.
    pub vol: T,
    pub theta: [T; 35],
    /// Columns ⋆(e^k ∧ Ω) spanning Λ³₇.
    pub u7: [[T; 35]; N],
    /// Inverse Gram matrix of `u7`.
    pub g7_inv: Mat7<T>,
}

impl<T: Scalar> PointStructure<T> {
    pub fn new(omega: &[T]) -> Result<Self> {
        assert_eq!(omega.len(), 35);
        let b = bilinear_form(omega);
        check_positive(&b).map_err(|signature| Error::NotPositive { signature })?;
        let (det_b, b_inv) = det_inv7(&b).ok_or(Error::NotPositive {
            signature: Signature {
                positive: 0,
                negative: 0,
                zero: N,
            },
        })?;
        let kappa = det_b.powf(-1.0 / 9.0);
        let g: Mat7<T> = std::array::from_fn(|i| std::array::from_fn(|j| b[i][j] * kappa));
        let kinv = T::one() / kappa;
        let inv: Mat7<T> = std::array::from_fn(|i| std::array::from_fn(|j| b_inv[i][j] * kinv));
        let vol = det_b.powf(1.0 / 9.0);
        let metric = MetricTensor::from_parts(g, inv, vol * vol);
        let omega: [T; 35] = std::array::from_fn(|i| omega[i]);
        let mut theta = [T::zero(); 35];
        hodge_into(&omega, 3, &metric, &mut theta);
        let tables = Tables::get();
        let mut u7 = [[T::zero(); 35]; N];
        for (k, col) in u7.iter_mut().enumerate() {
            let mut w = [T::zero(); 35];
            for e in tables.exterior(3, k) {
                w[e.dst as usize] += omega[e.src as usize].scale(e.sign);
            }
            hodge_into(&w, 4, &metric, col);
        }
        // ⟨ξ∧Ω, η∧Ω⟩ = 4⟨ξ, η⟩ and ⋆ is an isometry, so the Gram matrix of
        // u7 is 4g⁻¹.
        let g7_inv: Mat7<T> = std::array::from_fn(|i| std::array::from_fn(|j| g[i][j].scale(0.25)));
        Ok(Self {
            omega,
            b,
            b_inv,
            det_b,
            metric,
            vol,
            theta,
            u7,
            g7_inv,
        })
    }

    /// [t]₁ = (⟨t,Ω⟩/⟨Ω,Ω⟩) Ω.
    pub fn proj3_1(&self, t: &[T], out: &mut [T]) {
        let c = inner_raw(t, &self.omega, 3, &self.metric) / inner_raw(&self.omega, &self.omega, 3, &self.metric);
        for (o, w) in out.iter_mut().zip(&self.omega) {
            *o = *w * c;
        }
    }

    /// Coefficients x with [t]₇ = Σ x_k ⋆(e^k ∧ Ω).
    pub fn coords3_7(&self, t: &[T]) -> [T; N] {
        let mut gt = [T::zero(); 35];
        crate::linalg::matvec(self.metric.gram(3), t, &mut gt);
        let r: [T; N] = std::array::from_fn(|k| crate::linalg::dot(&self.u7[k], &gt));
        std::array::from_fn(|i| (0..N).map(|k| self.g7_inv[i][k] * r[k]).sum())
    }

    pub fn proj3_7(&self, t: &[T], out: &mut [T]) {
        let x = self.coords3_7(t);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).map(|k| x[k] * self.u7[k][i]).sum();
        }
    }

    /// [t]₇ on 2-forms: (t + ⋆(t∧Ω))/3.
    pub fn proj2_7(&self, t: &[T], out: &mut [T]) {
        let mut w = [T::zero(); 21];
        crate::exterior::wedge_acc(t, 2, &self.omega, 3, &mut w);
        hodge_into(&w, 5, &self.metric, out);
        for (x, y) in out.iter_mut().zip(t) {
            *x = (*x + *y).scale(1.0 / 3.0);
        }
    }

    /// p(t) = (4/3)[t]₁ + [t]₇ − [t]₂₇ = −t + (7/3)[t]₁ + 2[t]₇.
    pub fn p_apply(&self, t: &[T], out: &mut [T]) {
        let mut t1 = [T::zero(); 35];
        let mut t7 = [T::zero(); 35];
        self.proj3_1(t, &mut t1);
        self.proj3_7(t, &mut t7);
        for i in 0..35 {
            out[i] = -t[i] + t1[i].scale(7.0 / 3.0) + t7[i].scale(2.0);
        }
    }
}

/// Induced metric and volume scale of a positive 3-form.
pub fn metric_from_form<T: Scalar>(omega: &crate::exterior::Form<T>) -> Result<(MetricTensor<T>, T)> {
    if omega.degree() != 3 {
        return Err(crate::error::invalid("metric_from_form needs a 3-form"));
    }
    let s = PointStructure::new(omega.coeffs())?;
    Ok((s.metric, s.vol))
}

/// Positivity test with the signature of B as diagnostic.
pub fn is_positive(omega: &crate::exterior::Form<f64>) -> (bool, Signature) {
    if omega.degree() != 3 {
        return (
            false,
            Signature {
                positive: 0,
                negative: 0,
                zero: N,
            },
        );
    }
    let b = bilinear_form(omega.coeffs());
    let eigs = crate::linalg::sym_eigenvalues7(&b);
    (check_positive(&b).is_ok(), signature(&eigs))
}
