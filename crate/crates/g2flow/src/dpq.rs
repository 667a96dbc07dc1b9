//! First-order G2 operators between the reference modules Ω₁ (functions),
//! Ω₇ (1-forms), Ω₁₄ (2-forms in Λ²₁₄) and Ω₂₇ (3-forms in Λ³₂₇) at a
//! torsion-free background, and the catalogue of identities they satisfy.

use crate::calculus::StructureField;
use crate::error::{invalid, Error, Result};
use crate::exterior::{dim, inner_raw, wedge_acc, N};
use crate::field::FormField;
use crate::grid::{Stencil, TorusGrid};
use crate::rng::SeededRng;
use serde::Serialize;
use std::sync::Arc;

/// Reference module tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Module {
    One,
    Seven,
    Fourteen,
    TwentySeven,
}

impl Module {
    pub fn degree(self) -> usize {
        match self {
            Module::One => 0,
            Module::Seven => 1,
            Module::Fourteen => 2,
            Module::TwentySeven => 3,
        }
    }

    pub fn label(self) -> usize {
        match self {
            Module::One => 1,
            Module::Seven => 7,
            Module::Fourteen => 14,
            Module::TwentySeven => 27,
        }
    }

    pub fn from_label(l: usize) -> Result<Self> {
        match l {
            1 => Ok(Module::One),
            7 => Ok(Module::Seven),
            14 => Ok(Module::Fourteen),
            27 => Ok(Module::TwentySeven),
            _ => Err(invalid(format!("no reference module of dimension {l}"))),
        }
    }
}

/// Pointwise G2 maps and the d^p_q operators over a torsion-free structure.
pub struct G2Ops<'a> {
    s: &'a StructureField,
}

/// Torsion is accepted below this multiple of the structure's L² norm.
const TORSION_TOL: f64 = 1e-10;

impl<'a> G2Ops<'a> {
    /// Fails with a precondition error unless ‖dΩ‖ + ‖δΩ‖ is at roundoff.
    pub fn new(s: &'a StructureField) -> Result<Self> {
        let (d, delta) = s.torsion_norms()?;
        let scale = s.l2_norm_sq(s.omega())?.sqrt();
        if d + delta > TORSION_TOL * (1.0 + scale) {
            return Err(Error::Precondition(format!(
                "G2 operators need a torsion-free background; ‖dΩ‖+‖δΩ‖ = {:.3e}",
                d + delta
            )));
        }
        Ok(Self { s })
    }

    pub fn structure(&self) -> &StructureField {
        self.s
    }

    fn grid(&self) -> &Arc<TorusGrid> {
        self.s.grid()
    }

    pub fn star(&self, f: &FormField) -> FormField {
        self.s.hodge(f).expect("same grid")
    }

    pub fn d(&self, f: &FormField) -> FormField {
        f.d().expect("degree below 7")
    }

    pub fn delta(&self, f: &FormField) -> FormField {
        self.s.codiff_adjoint(f).expect("degree above 0")
    }

    /// f ∧ Ω.
    pub fn wedge_omega(&self, f: &FormField) -> FormField {
        let p = f.degree();
        f.map_nodes(p + 3, |n, a, o| wedge_acc(a, p, &self.s.point(n).omega, 3, o))
    }

    /// f ∧ Θ.
    pub fn wedge_theta(&self, f: &FormField) -> FormField {
        let p = f.degree();
        f.map_nodes(p + 4, |n, a, o| wedge_acc(a, p, &self.s.point(n).theta, 4, o))
    }

    /// f · vol as a 7-form.
    pub fn times_vol(&self, f: &FormField) -> FormField {
        f.map_nodes(N, |n, a, o| o[0] = a[0] * self.s.point(n).vol)
    }

    /// [·]₇ and [·]₁₄ on 2-forms.
    pub fn proj2(&self, f: &FormField) -> (FormField, FormField) {
        let p7 = self.s.proj2_7(f).expect("2-form");
        let p14 = f.sub(&p7);
        (p7, p14)
    }

    /// [·]₁, [·]₇, [·]₂₇ on 3-forms.
    pub fn proj3(&self, f: &FormField) -> (FormField, FormField, FormField) {
        let p1 = f.map_nodes(3, |n, t, o| self.s.point(n).proj3_1(t, o));
        let p7 = self.s.proj3_7(f).expect("3-form");
        let p27 = f.sub(&p1).sub(&p7);
        (p1, p7, p27)
    }

    /// Projections of 4-forms through ⋆: [σ]_q = ⋆[⋆σ]_q.
    pub fn proj4(&self, f: &FormField) -> (FormField, FormField, FormField) {
        let (a, b, c) = self.proj3(&self.star(f));
        (self.star(&a), self.star(&b), self.star(&c))
    }

    /// Splits a 3-form as f·Ω + ⋆(α∧Ω) + γ.
    pub fn split3(&self, t: &FormField) -> (FormField, FormField, FormField) {
        let (_, _, gamma) = self.proj3(t);
        let f = t.map_nodes(0, |n, x, o| {
            let pt = self.s.point(n);
            o[0] = inner_raw(x, &pt.omega, 3, &pt.metric) / inner_raw(&pt.omega, &pt.omega, 3, &pt.metric);
        });
        let alpha = t.map_nodes(1, |n, x, o| o.copy_from_slice(&self.s.point(n).coords3_7(x)));
        (f, alpha, gamma)
    }

    /// f·Ω + ⋆(α∧Ω) + γ.
    pub fn join3(&self, f: &FormField, alpha: &FormField, gamma: &FormField) -> FormField {
        let mut t = self.scalar_omega(f).add(&self.star(&self.wedge_omega(alpha)));
        t.axpy(1.0, gamma);
        t
    }

    /// f·Ω for a function f.
    pub fn scalar_omega(&self, f: &FormField) -> FormField {
        self.wedge_omega(f)
    }

    /// f·Θ for a function f.
    pub fn scalar_theta(&self, f: &FormField) -> FormField {
        self.wedge_theta(f)
    }

    /// Largest pointwise component outside `m`, relative to the field.
    pub fn module_defect(&self, m: Module, f: &FormField) -> Result<f64> {
        if f.degree() != m.degree() {
            return Err(invalid(format!("Ω{} fields have degree {}", m.label(), m.degree())));
        }
        let off = match m {
            Module::One | Module::Seven => return Ok(0.0),
            Module::Fourteen => self.proj2(f).0.max_abs(),
            Module::TwentySeven => {
                let (a, b, _) = self.proj3(f);
                a.max_abs().max(b.max_abs())
            }
        };
        Ok(off / (1e-300 + f.max_abs()))
    }

    /// d^p_q applied to a field of reference module `p`.
    pub fn dpq(&self, p: Module, q: Module, f: &FormField) -> Result<FormField> {
        if **f.grid() != **self.grid() {
            return Err(invalid("field and structure live on different grids"));
        }
        let defect = self.module_defect(p, f)?;
        if defect > 1e-9 {
            return Err(invalid(format!("input is not in Ω{} (defect {defect:.2e})", p.label())));
        }
        Ok(self.dpq_unchecked(p, q, f))
    }

    /// d^p_q without the module check.
    pub fn dpq_unchecked(&self, p: Module, q: Module, f: &FormField) -> FormField {
        use Module::*;
        match (p, q) {
            (One, Seven) => self.d(f),
            (Seven, One) => self.delta(f),
            (Seven, Seven) => self.star(&self.wedge_theta(&self.d(f))),
            (Seven, Fourteen) => self.proj2(&self.d(f)).1,
            (Seven, TwentySeven) => self.proj3(&self.d(&self.star(&self.wedge_theta(f)))).2,
            (Fourteen, Seven) => self.star(&self.wedge_omega(&self.proj3(&self.d(f)).1)).scale(-1.0),
            (Fourteen, TwentySeven) => self.proj3(&self.d(f)).2,
            (TwentySeven, Fourteen) => self.proj2(&self.delta(f)).1,
            (TwentySeven, Seven) => self.star(&self.wedge_theta(&self.delta(f))),
            (TwentySeven, TwentySeven) => self.star(&self.proj4(&self.d(f)).2),
            // d¹₁, d¹₁₄, d¹₂₇, d¹⁴₁, d¹⁴₁₄, d²⁷₁ vanish identically.
            _ => FormField::zeros(self.grid(), q.degree()),
        }
    }
}

/// d^p_q applied to `input` at the torsion-free structure `s`.
pub fn dpq(p: Module, q: Module, input: &FormField, s: &StructureField) -> Result<FormField> {
    G2Ops::new(s)?.dpq(p, q, input)
}

/// Seeded trigonometric reference fields with wavenumber-one modes on up to
/// three active axes. The same coefficients sample any grid.
#[derive(Debug, Clone)]
pub struct TrigSpec {
    /// Per coefficient: amplitudes of sin(k x_a), cos(k x_b) and sin(Σ k x_i).
    coeffs: Vec<[f64; 3]>,
    axes: Vec<usize>,
}

impl TrigSpec {
    pub fn new(rng: &mut SeededRng, degree: usize, grid: &TorusGrid) -> Self {
        let mut axes = grid.active_axes();
        axes.truncate(3);
        Self {
            coeffs: (0..dim(degree)).map(|_| std::array::from_fn(|_| rng.normal())).collect(),
            axes,
        }
    }

    /// Samples the field; wavenumbers are 2π/L along each axis.
    pub fn sample(&self, grid: &Arc<TorusGrid>, degree: usize) -> FormField {
        assert_eq!(dim(degree), self.coeffs.len());
        let len = grid.len();
        let axes = &self.axes;
        let phase = move |x: &[f64; N], i: usize| std::f64::consts::TAU * x[axes[i]] / len[axes[i]];
        FormField::from_fn(grid, degree, |x| {
            if axes.is_empty() {
                return self.coeffs.iter().map(|w| w[0]).collect();
            }
            let sa = phase(&x, 0).sin();
            let cb = phase(&x, axes.len() - 1).cos();
            let s3 = (0..axes.len()).map(|i| phase(&x, i)).sum::<f64>().sin();
            self.coeffs.iter().map(|w| w[0] * sa + w[1] * cb + w[2] * s3).collect()
        })
    }
}

/// One reference field per module.
pub struct RefFields {
    pub f: FormField,
    pub alpha: FormField,
    pub beta: FormField,
    pub gamma: FormField,
}

impl RefFields {
    /// Samples the specs and projects β into Λ²₁₄ and γ into Λ³₂₇.
    pub fn sample(ops: &G2Ops, specs: &[TrigSpec; 4]) -> Self {
        let g = ops.grid().clone();
        Self {
            f: specs[0].sample(&g, 0),
            alpha: specs[1].sample(&g, 1),
            beta: ops.proj2(&specs[2].sample(&g, 2)).1,
            gamma: ops.proj3(&specs[3].sample(&g, 3)).2,
        }
    }
}

type RowFn = fn(&G2Ops, &RefFields) -> (FormField, FormField);

/// A field identity lhs = rhs between compositions of d^p_q.
pub struct Identity {
    pub family: &'static str,
    pub name: &'static str,
    pub eval: RowFn,
}

fn d_(o: &G2Ops, p: usize, q: usize, f: &FormField) -> FormField {
    o.dpq_unchecked(Module::from_label(p).unwrap(), Module::from_label(q).unwrap(), f)
}

fn lin(terms: &[(f64, &FormField)]) -> FormField {
    let mut out = FormField::zeros(terms[0].1.grid(), terms[0].1.degree());
    for (c, f) in terms {
        out.axpy(*c, f);
    }
    out
}

/// Exterior derivative formulae, second-order identities, Laplacians and
/// the component formulae for d and δ of a 3-form.
pub fn identities() -> Vec<Identity> {
    vec![
        Identity { family: "exterior-derivative", name: "df = d17 f", eval: |o, r| (o.d(&r.f), d_(o, 1, 7, &r.f)) },
        Identity {
            family: "exterior-derivative",
            name: "d(fΩ) = d17 f ∧ Ω",
            eval: |o, r| (o.d(&o.scalar_omega(&r.f)), o.wedge_omega(&d_(o, 1, 7, &r.f))),
        },
        Identity {
            family: "exterior-derivative",
            name: "d(f⋆Ω) = d17 f ∧ ⋆Ω",
            eval: |o, r| (o.d(&o.scalar_theta(&r.f)), o.wedge_theta(&d_(o, 1, 7, &r.f))),
        },
        Identity {
            family: "exterior-derivative",
            name: "dα = ⅓⋆(d77 α ∧ ⋆Ω) + d7_14 α",
            eval: |o, r| {
                let rhs = lin(&[(1.0 / 3.0, &o.star(&o.wedge_theta(&d_(o, 7, 7, &r.alpha)))), (1.0, &d_(o, 7, 14, &r.alpha))]);
                (o.d(&r.alpha), rhs)
            },
        },
        Identity {
            family: "exterior-derivative",
            name: "d⋆(α∧⋆Ω) = −3/7 d71 α·Ω − ½⋆(d77 α ∧ Ω) + d7_27 α",
            eval: |o, r| {
                let lhs = o.d(&o.star(&o.wedge_theta(&r.alpha)));
                let rhs = lin(&[
                    (-3.0 / 7.0, &o.scalar_omega(&d_(o, 7, 1, &r.alpha))),
                    (-0.5, &o.star(&o.wedge_omega(&d_(o, 7, 7, &r.alpha)))),
                    (1.0, &d_(o, 7, 27, &r.alpha)),
                ]);
                (lhs, rhs)
            },
        },
        Identity {
            family: "exterior-derivative",
            name: "d⋆(α∧Ω) = 4/7 d71 α·⋆Ω + ½ d77 α ∧ Ω + ⋆d7_27 α",
            eval: |o, r| {
                let lhs = o.d(&o.star(&o.wedge_omega(&r.alpha)));
                let rhs = lin(&[
                    (4.0 / 7.0, &o.scalar_theta(&d_(o, 7, 1, &r.alpha))),
                    (0.5, &o.wedge_omega(&d_(o, 7, 7, &r.alpha))),
                    (1.0, &o.star(&d_(o, 7, 27, &r.alpha))),
                ]);
                (lhs, rhs)
            },
        },
        Identity {
            family: "exterior-derivative",
            name: "d(α∧Ω) = ⅔ d77 α ∧ ⋆Ω − ⋆d7_14 α",
            eval: |o, r| {
                let rhs = lin(&[(2.0 / 3.0, &o.wedge_theta(&d_(o, 7, 7, &r.alpha))), (-1.0, &o.star(&d_(o, 7, 14, &r.alpha)))]);
                (o.d(&o.wedge_omega(&r.alpha)), rhs)
            },
        },
        Identity {
            family: "exterior-derivative",
            name: "d(α∧⋆Ω) = ⋆d77 α",
            eval: |o, r| (o.d(&o.wedge_theta(&r.alpha)), o.star(&d_(o, 7, 7, &r.alpha))),
        },
        Identity {
            family: "exterior-derivative",
            name: "d(⋆α) = −d71 α·vol",
            eval: |o, r| (o.d(&o.star(&r.alpha)), o.times_vol(&d_(o, 7, 1, &r.alpha)).scale(-1.0)),
        },
        Identity {
            family: "exterior-derivative",
            name: "dβ = ¼⋆(d14_7 β ∧ Ω) + d14_27 β",
            eval: |o, r| {
                let rhs = lin(&[(0.25, &o.star(&o.wedge_omega(&d_(o, 14, 7, &r.beta)))), (1.0, &d_(o, 14, 27, &r.beta))]);
                (o.d(&r.beta), rhs)
            },
        },
        Identity {
            family: "exterior-derivative",
            name: "d(⋆β) = ⋆d14_7 β",
            eval: |o, r| (o.d(&o.star(&r.beta)), o.star(&d_(o, 14, 7, &r.beta))),
        },
        Identity {
            family: "exterior-derivative",
            name: "dγ = ¼ d27_7 γ ∧ Ω + ⋆d27_27 γ",
            eval: |o, r| {
                let rhs = lin(&[(0.25, &o.wedge_omega(&d_(o, 27, 7, &r.gamma))), (1.0, &o.star(&d_(o, 27, 27, &r.gamma)))]);
                (o.d(&r.gamma), rhs)
            },
        },
        Identity {
            family: "exterior-derivative",
            name: "d(⋆γ) = −⅓ d27_7 γ ∧ ⋆Ω − ⋆d27_14 γ",
            eval: |o, r| {
                let rhs = lin(&[(-1.0 / 3.0, &o.wedge_theta(&d_(o, 27, 7, &r.gamma))), (-1.0, &o.star(&d_(o, 27, 14, &r.gamma)))]);
                (o.d(&o.star(&r.gamma)), rhs)
            },
        },
        // second-order identities
        Identity {
            family: "second-order",
            name: "d77 d17 = 0",
            eval: |o, r| (d_(o, 7, 7, &d_(o, 1, 7, &r.f)), FormField::zeros(o.grid(), 1)),
        },
        Identity {
            family: "second-order",
            name: "d7_14 d17 = 0",
            eval: |o, r| (d_(o, 7, 14, &d_(o, 1, 7, &r.f)), FormField::zeros(o.grid(), 2)),
        },
        Identity {
            family: "second-order",
            name: "d71 d77 = 0",
            eval: |o, r| (d_(o, 7, 1, &d_(o, 7, 7, &r.alpha)), FormField::zeros(o.grid(), 0)),
        },
        Identity {
            family: "second-order",
            name: "d14_7 d7_14 = ⅔ d77 d77",
            eval: |o, r| {
                let rhs = d_(o, 7, 7, &d_(o, 7, 7, &r.alpha)).scale(2.0 / 3.0);
                (d_(o, 14, 7, &d_(o, 7, 14, &r.alpha)), rhs)
            },
        },
        Identity {
            family: "second-order",
            name: "d7_14 d77 + 2 d27_14 d7_27 = 0",
            eval: |o, r| {
                let lhs = lin(&[(1.0, &d_(o, 7, 14, &d_(o, 7, 7, &r.alpha))), (2.0, &d_(o, 27, 14, &d_(o, 7, 27, &r.alpha)))]);
                (lhs, FormField::zeros(o.grid(), 2))
            },
        },
        Identity {
            family: "second-order",
            name: "3 d14_27 d7_14 + d7_27 d77 = 0",
            eval: |o, r| {
                let lhs = lin(&[(3.0, &d_(o, 14, 27, &d_(o, 7, 14, &r.alpha))), (1.0, &d_(o, 7, 27, &d_(o, 7, 7, &r.alpha)))]);
                (lhs, FormField::zeros(o.grid(), 3))
            },
        },
        Identity {
            family: "second-order",
            name: "d27_7 d7_27 = d77 d77 + 12/7 d17 d71",
            eval: |o, r| {
                let rhs = lin(&[(1.0, &d_(o, 7, 7, &d_(o, 7, 7, &r.alpha))), (12.0 / 7.0, &d_(o, 1, 7, &d_(o, 7, 1, &r.alpha)))]);
                (d_(o, 27, 7, &d_(o, 7, 27, &r.alpha)), rhs)
            },
        },
        Identity {
            family: "second-order",
            name: "2 d27_27 d7_27 − d7_27 d77 = 0",
            eval: |o, r| {
                let lhs = lin(&[(2.0, &d_(o, 27, 27, &d_(o, 7, 27, &r.alpha))), (-1.0, &d_(o, 7, 27, &d_(o, 7, 7, &r.alpha)))]);
                (lhs, FormField::zeros(o.grid(), 3))
            },
        },
        Identity {
            family: "second-order",
            name: "d71 d14_7 = 0",
            eval: |o, r| (d_(o, 7, 1, &d_(o, 14, 7, &r.beta)), FormField::zeros(o.grid(), 0)),
        },
        Identity {
            family: "second-order",
            name: "d77 d14_7 + 2 d27_7 d14_27 = 0",
            eval: |o, r| {
                let lhs = lin(&[(1.0, &d_(o, 7, 7, &d_(o, 14, 7, &r.beta))), (2.0, &d_(o, 27, 7, &d_(o, 14, 27, &r.beta)))]);
                (lhs, FormField::zeros(o.grid(), 1))
            },
        },
        Identity {
            family: "second-order",
            name: "d7_27 d14_7 + 4 d27_27 d14_27 = 0",
            eval: |o, r| {
                let lhs = lin(&[(1.0, &d_(o, 7, 27, &d_(o, 14, 7, &r.beta))), (4.0, &d_(o, 27, 27, &d_(o, 14, 27, &r.beta)))]);
                (lhs, FormField::zeros(o.grid(), 3))
            },
        },
        Identity {
            family: "second-order",
            name: "3 d14_7 d27_14 + d77 d27_7 = 0",
            eval: |o, r| {
                let lhs = lin(&[(3.0, &d_(o, 14, 7, &d_(o, 27, 14, &r.gamma))), (1.0, &d_(o, 7, 7, &d_(o, 27, 7, &r.gamma)))]);
                (lhs, FormField::zeros(o.grid(), 1))
            },
        },
        Identity {
            family: "second-order",
            name: "d7_14 d27_7 + 4 d27_14 d27_27 = 0",
            eval: |o, r| {
                let lhs = lin(&[(1.0, &d_(o, 7, 14, &d_(o, 27, 7, &r.gamma))), (4.0, &d_(o, 27, 14, &d_(o, 27, 27, &r.gamma)))]);
                (lhs, FormField::zeros(o.grid(), 2))
            },
        },
        Identity {
            family: "second-order",
            name: "2 d27_7 d27_27 − d77 d27_7 = 0",
            eval: |o, r| {
                let lhs = lin(&[(2.0, &d_(o, 27, 7, &d_(o, 27, 27, &r.gamma))), (-1.0, &d_(o, 7, 7, &d_(o, 27, 7, &r.gamma)))]);
                (lhs, FormField::zeros(o.grid(), 1))
            },
        },
        // Laplacians
        Identity {
            family: "laplacian",
            name: "Δf = d71 d17 f",
            eval: |o, r| (o.structure().laplacian(&r.f).unwrap(), d_(o, 7, 1, &d_(o, 1, 7, &r.f))),
        },
        Identity {
            family: "laplacian",
            name: "Δα = (d77 d77 + d17 d71) α",
            eval: |o, r| {
                let rhs = lin(&[(1.0, &d_(o, 7, 7, &d_(o, 7, 7, &r.alpha))), (1.0, &d_(o, 1, 7, &d_(o, 7, 1, &r.alpha)))]);
                (o.structure().laplacian(&r.alpha).unwrap(), rhs)
            },
        },
        Identity {
            family: "laplacian",
            name: "Δβ = (5/4 d7_14 d14_7 + d27_14 d14_27) β",
            eval: |o, r| {
                let rhs = lin(&[(1.25, &d_(o, 7, 14, &d_(o, 14, 7, &r.beta))), (1.0, &d_(o, 27, 14, &d_(o, 14, 27, &r.beta)))]);
                (o.structure().laplacian(&r.beta).unwrap(), rhs)
            },
        },
        Identity {
            family: "laplacian",
            name: "Δγ = (7/12 d7_27 d27_7 + d14_27 d27_14 + d27_27²) γ",
            eval: |o, r| {
                let rhs = lin(&[
                    (7.0 / 12.0, &d_(o, 7, 27, &d_(o, 27, 7, &r.gamma))),
                    (1.0, &d_(o, 14, 27, &d_(o, 27, 14, &r.gamma))),
                    (1.0, &d_(o, 27, 27, &d_(o, 27, 27, &r.gamma))),
                ]);
                (o.structure().laplacian(&r.gamma).unwrap(), rhs)
            },
        },
        Identity {
            family: "laplacian",
            name: "Δ(fΩ + ⋆(α∧Ω) + γ) = Δf·Ω + ⋆(Δα∧Ω) + Δγ",
            eval: |o, r| {
                let s = o.structure();
                let t = o.join3(&r.f, &r.alpha, &r.gamma);
                let rhs = o.join3(&s.laplacian(&r.f).unwrap(), &s.laplacian(&r.alpha).unwrap(), &s.laplacian(&r.gamma).unwrap());
                (s.laplacian(&t).unwrap(), rhs)
            },
        },
        // d and δ of a 3-form in components
        Identity {
            family: "three-form-components",
            name: "dt = 4/7 d71 α·⋆Ω + (d17 f + ½ d77 α + ¼ d27_7 γ)∧Ω + ⋆(d7_27 α + d27_27 γ)",
            eval: |o, r| {
                let t = o.join3(&r.f, &r.alpha, &r.gamma);
                let one = lin(&[(1.0, &d_(o, 1, 7, &r.f)), (0.5, &d_(o, 7, 7, &r.alpha)), (0.25, &d_(o, 27, 7, &r.gamma))]);
                let s27 = lin(&[(1.0, &d_(o, 7, 27, &r.alpha)), (1.0, &d_(o, 27, 27, &r.gamma))]);
                let rhs = lin(&[(4.0 / 7.0, &o.scalar_theta(&d_(o, 7, 1, &r.alpha))), (1.0, &o.wedge_omega(&one)), (1.0, &o.star(&s27))]);
                (o.d(&t), rhs)
            },
        },
        Identity {
            family: "three-form-components",
            name: "δt = ⋆((−d17 f − ⅔ d77 α + ⅓ d27_7 γ)∧⋆Ω) + d7_14 α + d27_14 γ",
            eval: |o, r| {
                let t = o.join3(&r.f, &r.alpha, &r.gamma);
                let one = lin(&[(-1.0, &d_(o, 1, 7, &r.f)), (-2.0 / 3.0, &d_(o, 7, 7, &r.alpha)), (1.0 / 3.0, &d_(o, 27, 7, &r.gamma))]);
                let rhs = lin(&[(1.0, &o.star(&o.wedge_theta(&one))), (1.0, &d_(o, 7, 14, &r.alpha)), (1.0, &d_(o, 27, 14, &r.gamma))]);
                (o.delta(&t), rhs)
            },
        },
    ]
}

/// Outcome of one identity under refinement.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub family: String,
    pub name: String,
    /// max|lhs − rhs| / (1 + max|lhs|) at the coarse and fine grid.
    pub residual: [f64; 2],
    /// Truncation error of the row's terms against the spectral stencil.
    pub truncation: [f64; 2],
    /// log₂ of the truncation ratio; `None` when the terms are exact.
    pub rate: Option<f64>,
    pub pass: bool,
}

/// Settings for an identity refinement study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub coarse: [usize; N],
    pub len: [f64; N],
    pub fd_order: usize,
    pub residual_tol: f64,
    pub rate_slack: f64,
    pub seed: u64,
}

impl StudyConfig {
    /// Three active axes of period 2π, n = 8 refined to 16.
    pub fn standard(fd_order: usize, seed: u64) -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            coarse: [8, 8, 8, 1, 1, 1, 1],
            len: [tau, tau, tau, 1.0, 1.0, 1.0, 1.0],
            fd_order,
            residual_tol: 1e-10,
            rate_slack: 0.5,
            seed,
        }
    }
}

/// Largest coefficient gap between fields sampled on the same nodes, even
/// when their stencils differ.
fn value_gap(a: &FormField, b: &FormField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rel_max(a: &FormField, b: &FormField) -> f64 {
    a.sub(b).max_abs() / (1.0 + a.max_abs())
}

/// Evaluates every identity at the coarse grid and at its 2× refinement,
/// with the flat structure `form`.
pub fn identity_study(cfg: &StudyConfig, form: &crate::exterior::Form<f64>, rows: &[Identity]) -> Result<Vec<IdentityCheck>> {
    let coarse = TorusGrid::new(cfg.coarse, cfg.len, cfg.fd_order)?;
    let mut rng = SeededRng::new(cfg.seed);
    let specs: [TrigSpec; 4] = std::array::from_fn(|p| TrigSpec::new(&mut rng, p, &coarse));
    let levels = [coarse.clone(), coarse.refine(2)];
    // results[level] = per row (fd lhs, fd rhs, spectral lhs, spectral rhs)
    let mut per_level: Vec<Vec<(FormField, FormField, FormField, FormField)>> = Vec::new();
    for grid in &levels {
        let fd = Arc::new(grid.clone());
        let sp = Arc::new(grid.restencil(Stencil::Spectral));
        let s_fd = StructureField::flat(&fd, form)?;
        let s_sp = StructureField::flat(&sp, form)?;
        let (o_fd, o_sp) = (G2Ops::new(&s_fd)?, G2Ops::new(&s_sp)?);
        let (r_fd, r_sp) = (RefFields::sample(&o_fd, &specs), RefFields::sample(&o_sp, &specs));
        per_level.push(
            rows.iter()
                .map(|row| {
                    let (a, b) = (row.eval)(&o_fd, &r_fd);
                    let (c, d) = (row.eval)(&o_sp, &r_sp);
                    (a, b, c, d)
                })
                .collect(),
        );
    }
    let order = cfg.fd_order as f64;
    Ok(rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let residual: [f64; 2] = std::array::from_fn(|l| rel_max(&per_level[l][i].0, &per_level[l][i].1));
            let truncation: [f64; 2] = std::array::from_fn(|l| {
                let (a, b, c, d) = &per_level[l][i];
                let scale = 1.0 + c.max_abs().max(d.max_abs());
                value_gap(a, c).max(value_gap(b, d)) / scale
            });
            // terms that are exact at every resolution carry no rate
            let rate = (truncation[0] > 1e-11).then(|| (truncation[0] / truncation[1]).log2());
            let rate_ok = rate.is_none_or(|r| (r - order).abs() <= cfg.rate_slack);
            IdentityCheck {
                family: row.family.into(),
                name: row.name.into(),
                residual,
                truncation,
                rate,
                pass: residual.iter().all(|&r| r <= cfg.residual_tol) && rate_ok,
            }
        })
        .collect())
}

/// ⟨d^p_q σ, τ⟩ − ⟨σ, d^q_p τ⟩ relative to the product of norms, for every
/// pair of reference modules.
pub fn adjointness_study(s: &StructureField, seed: u64) -> Result<Vec<(Module, Module, f64)>> {
    use Module::*;
    let ops = G2Ops::new(s)?;
    let mut rng = SeededRng::new(seed);
    let specs: [TrigSpec; 4] = std::array::from_fn(|p| TrigSpec::new(&mut rng, p, s.grid()));
    let r = RefFields::sample(&ops, &specs);
    let field = |m: Module| match m {
        One => &r.f,
        Seven => &r.alpha,
        Fourteen => &r.beta,
        TwentySeven => &r.gamma,
    };
    let all = [One, Seven, Fourteen, TwentySeven];
    let mut out = Vec::new();
    for &p in &all {
        for &q in &all {
            let (sp, tq) = (field(p), field(q));
            let lhs = s.l2_inner(&ops.dpq(p, q, sp)?, tq)?;
            let rhs = s.l2_inner(sp, &ops.dpq(q, p, tq)?)?;
            let scale = s.l2_norm_sq(sp)?.sqrt() * s.l2_norm_sq(tq)?.sqrt();
            out.push((p, q, (lhs - rhs).abs() / (1.0 + scale)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2::standard::normal_form;

    fn flat(n: usize) -> StructureField {
        let g = Arc::new(TorusGrid::new([n, n, n, 1, 1, 1, 1], [6.0, 5.0, 4.0, 1.0, 1.0, 1.0, 1.0], 4).unwrap());
        StructureField::flat(&g, &normal_form()).unwrap()
    }

    #[test]
    fn d17_of_constant_vanishes() {
        let s = flat(6);
        let f = FormField::from_values(s.grid(), 0, vec![2.5; s.grid().node_count()]).unwrap();
        assert_eq!(dpq(Module::One, Module::Seven, &f, &s).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn d71_is_the_codifferential() {
        let s = flat(6);
        let mut rng = SeededRng::new(4);
        let a = TrigSpec::new(&mut rng, 1, s.grid()).sample(s.grid(), 1);
        let x = dpq(Module::Seven, Module::One, &a, &s).unwrap();
        assert!(x.sub(&s.codiff_analytic(&a).unwrap()).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_module_and_torsion() {
        let s = flat(4);
        let mut rng = SeededRng::new(1);
        let b = TrigSpec::new(&mut rng, 2, s.grid()).sample(s.grid(), 2);
        assert!(matches!(dpq(Module::Fourteen, Module::Seven, &b, &s), Err(Error::InvalidArgument(_))));
        let bumped = FormField::from_fn(s.grid(), 3, |x| {
            let mut v = normal_form().into_coeffs();
            v[0] += 0.1 * x[0].sin();
            v
        });
        let twisted = StructureField::new(bumped).unwrap();
        assert!(matches!(dpq(Module::One, Module::Seven, &b, &twisted), Err(Error::Precondition(_))));
    }

    #[test]
    fn formal_adjointness_holds() {
        for (p, q, r) in adjointness_study(&flat(6), 8).unwrap() {
            assert!(r < 1e-11, "d{}_{}: {r}", p.label(), q.label());
        }
    }

    #[test]
    fn split_and_join_are_inverse() {
        let s = flat(4);
        let ops = G2Ops::new(&s).unwrap();
        let mut rng = SeededRng::new(2);
        let t = TrigSpec::new(&mut rng, 3, s.grid()).sample(s.grid(), 3);
        let (f, a, g) = ops.split3(&t);
        assert!(ops.join3(&f, &a, &g).sub(&t).max_abs() < 1e-12);
    }
}

#[cfg(test)]
mod study_tests {
    use super::*;
    use crate::g2::standard::normal_form;

    #[test]
    fn every_identity_holds_and_converges() {
        for order in [2, 4] {
            let rows = identity_study(&StudyConfig::standard(order, 17), &normal_form(), &identities()).unwrap();
            assert_eq!(rows.len(), 34);
            for r in &rows {
                assert!(r.pass, "order {order}: {r:?}");
            }
        }
    }
}
