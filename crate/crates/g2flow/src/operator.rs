//! Linearisation of Q̃ at a flat torsion-free background: the operator L in
//! two independent forms, dense assembly, spectra, the Gårding margin and
//! the orbit/slice splitting.

use crate::calculus::StructureField;
use crate::deturck::{lie_derivative, VectorField};
use crate::dpq::{G2Ops, Module};
use crate::error::{invalid, Error, Result};
use crate::exterior::{dim, Form, N};
use crate::field::FormField;
use crate::g2::G2Structure;
use crate::grid::TorusGrid;
use crate::symbol::symbol_deturck;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Largest dense operator dimension. A 5000×5000 f64 matrix takes 200 MB
/// and a symmetric eigensolve of it takes minutes on one core.
pub const DENSE_CAP: usize = 5000;

/// Eigenvalues below this multiple of the largest |λ| count as kernel.
pub const KERNEL_CUT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    /// The linearisation L of Q̃.
    L,
    HodgeLaplacian,
    /// λλ*, the normal operator of the orbit map.
    LambdaStarNormal,
}

/// Which closed form to use when applying L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LForm {
    /// −δdΩ̇ − p dδ pΩ̇ − 3d[δΩ̇]₇.
    Direct,
    /// −ΔΩ̇ minus the d^p_q correction terms on the split Ω̇ = ḟΩ̄ + ⋆(α̇∧Ω̄) + γ̇.
    Split,
}

/// A dense operator on 3-form (or vector) fields over a uniform background.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub kind: OperatorKind,
    pub matrix: DMatrix<f64>,
    background: StructureField,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn background(&self) -> &StructureField {
        &self.background
    }

    /// The matrix in metric-orthonormal coordinates, where self-adjointness
    /// for the L² product becomes plain symmetry.
    pub fn weighted(&self) -> DMatrix<f64> {
        if self.kind == OperatorKind::LambdaStarNormal {
            return self.matrix.clone();
        }
        let r = chol_upper(self.background.point(0).metric.gram(3), 35);
        let rinv = r.clone().try_inverse().expect("invertible factor");
        let nodes = self.background.grid().node_count();
        let mut out = self.matrix.clone();
        for a in 0..nodes {
            for b in 0..nodes {
                let blk = out.view((35 * a, 35 * b), (35, 35)).into_owned();
                out.view_mut((35 * a, 35 * b), (35, 35)).copy_from(&(&r * blk * &rinv));
            }
        }
        out
    }

    /// ‖W − Wᵀ‖_F / ‖W‖_F for the weighted matrix W.
    pub fn symmetry_residual(&self) -> f64 {
        let w = self.weighted();
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        (&w - w.transpose()).norm() / n
    }
}

fn chol_upper(gram: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, gram)
        .cholesky()
        .expect("Gram matrix is positive definite")
        .l()
        .transpose()
}

fn require_uniform(bar: &StructureField) -> Result<()> {
    if !bar.is_uniform() {
        return Err(invalid("dense assembly needs a constant (flat) background"));
    }
    Ok(())
}

/// L Ω̇ = −δdΩ̇ − p dδ pΩ̇ − 3d[δΩ̇]₇.
pub fn l_apply(bar: &StructureField, f: &FormField) -> Result<FormField> {
    let mut out = bar.codiff_adjoint(&f.d()?)?;
    let pf = bar.p_apply(f)?;
    out.axpy(1.0, &bar.p_apply(&bar.codiff_adjoint(&pf)?.d()?)?);
    out.axpy(3.0, &bar.proj2_7(&bar.codiff_adjoint(f)?)?.d()?);
    Ok(out.scale(-1.0))
}

/// L Ω̇ from the split form:
/// −LΩ̇ = ΔΩ̇ + (34/21) d⁷₁d¹₇ḟ·Ω̄ + ⋆(d⁷₇d⁷₇α̇∧Ω̄) + d⁷₂₇d²⁷₇γ̇
///        − (2/21) d⁷₁d²⁷₇γ̇·Ω̄ − (2/3) d⁷₂₇d¹₇ḟ.
pub fn l_apply_split(ops: &G2Ops, f: &FormField) -> Result<FormField> {
    use Module::*;
    let d = |p, q, x: &FormField| ops.dpq_unchecked(p, q, x);
    let (fs, alpha, gamma) = ops.split3(f);
    let df = d(One, Seven, &fs);
    let dg = d(TwentySeven, Seven, &gamma);
    let mut scalar = d(Seven, One, &df).scale(34.0 / 21.0);
    scalar.axpy(-2.0 / 21.0, &d(Seven, One, &dg));
    let vector = d(Seven, Seven, &d(Seven, Seven, &alpha));
    let mut rest = d(Seven, TwentySeven, &dg);
    rest.axpy(-2.0 / 3.0, &d(Seven, TwentySeven, &df));
    let mut minus_l = ops.structure().laplacian(f)?;
    minus_l.axpy(1.0, &ops.join3(&scalar, &vector, &rest));
    Ok(minus_l.scale(-1.0))
}

/// Applies `op` to every unit field of degree `deg_in` and stacks the
/// results as columns. Columns are independent tasks.
fn assemble_columns<F>(grid: &Arc<TorusGrid>, deg_in: usize, rows: usize, op: F) -> Result<DMatrix<f64>>
where
    F: Fn(&FormField) -> Result<FormField> + Sync,
{
    let cols = dim(deg_in) * grid.node_count();
    if cols > DENSE_CAP || rows > DENSE_CAP {
        return Err(Error::Capacity {
            dim: cols.max(rows),
            cap: DENSE_CAP,
        });
    }
    let columns: Vec<Result<Vec<f64>>> = (0..cols)
        .into_par_iter()
        .map(|j| {
            let mut e = FormField::zeros(grid, deg_in);
            e.values_mut()[j] = 1.0;
            let v = op(&e)?;
            if v.values().len() != rows {
                return Err(invalid("operator output has the wrong size"));
            }
            Ok(v.values().to_vec())
        })
        .collect();
    let mut m = DMatrix::zeros(rows, cols);
    for (j, c) in columns.into_iter().enumerate() {
        m.set_column(j, &DVector::from_vec(c?));
    }
    Ok(m)
}

/// Dense L at a flat torsion-free background.
pub fn assemble_l(bar: &StructureField, form: LForm) -> Result<OperatorMatrix> {
    require_uniform(bar)?;
    let ops = G2Ops::new(bar)?;
    let g = bar.grid();
    let rows = 35 * g.node_count();
    let matrix = match form {
        LForm::Direct => assemble_columns(g, 3, rows, |f| l_apply(bar, f))?,
        LForm::Split => assemble_columns(g, 3, rows, |f| l_apply_split(&ops, f))?,
    };
    Ok(OperatorMatrix {
        kind: OperatorKind::L,
        matrix,
        background: bar.clone(),
    })
}

/// Dense Hodge Laplacian on 3-forms.
pub fn assemble_hodge_laplacian(bar: &StructureField) -> Result<OperatorMatrix> {
    require_uniform(bar)?;
    let g = bar.grid();
    let matrix = assemble_columns(g, 3, 35 * g.node_count(), |f| bar.laplacian(f))?;
    Ok(OperatorMatrix {
        kind: OperatorKind::HodgeLaplacian,
        matrix,
        background: bar.clone(),
    })
}

/// λ*: X ↦ L_XΩ̄ as a (35·nodes)×(7·nodes) matrix.
pub fn lambda_star_matrix(bar: &StructureField) -> Result<DMatrix<f64>> {
    require_uniform(bar)?;
    let g = bar.grid();
    assemble_columns(g, 1, 35 * g.node_count(), |x| {
        lie_derivative(&VectorField::from_components(x.clone())?, bar.omega())
    })
}

/// Weights w with ⟨a, b⟩_{L²} = Σ a_i (W b)_i for 3-form coefficient
/// vectors: cell · vol · Gram₃ in every node block.
fn l2_weight(bar: &StructureField) -> DMatrix<f64> {
    let pt = bar.point(0);
    DMatrix::from_row_slice(35, 35, pt.metric.gram(3)) * (pt.vol * bar.grid().cell_volume())
}

fn apply_blockwise(w: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let b = w.nrows();
    let mut out = DVector::zeros(v.len());
    for k in 0..v.len() / b {
        out.rows_mut(k * b, b).copy_from(&(w * v.rows(k * b, b)));
    }
    out
}

/// λλ* = λ*ᵀ W λ* on vector fields.
pub fn assemble_lambda_star_normal(bar: &StructureField) -> Result<OperatorMatrix> {
    let m = lambda_star_matrix(bar)?;
    let w = l2_weight(bar);
    let mut wm = m.clone();
    for j in 0..m.ncols() {
        let col = apply_blockwise(&w, &m.column(j).into_owned());
        wm.set_column(j, &col);
    }
    Ok(OperatorMatrix {
        kind: OperatorKind::LambdaStarNormal,
        matrix: m.transpose() * wm,
        background: bar.clone(),
    })
}

/// Frobenius norm of the difference, an upper bound for the operator norm.
pub fn operator_distance(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
    (&a.matrix - &b.matrix).norm()
}

/// Both sides of ⟨−LΩ̇, Ω̇⟩ = ‖dΩ̇‖² + ‖δpΩ̇‖² + 3‖[δΩ̇]₇‖².
pub fn quadratic_identity(bar: &StructureField, f: &FormField) -> Result<(f64, f64)> {
    let lhs = -bar.l2_inner(&l_apply(bar, f)?, f)?;
    let df = f.d()?;
    let dp = bar.codiff_adjoint(&bar.p_apply(f)?)?;
    let d7 = bar.proj2_7(&bar.codiff_adjoint(f)?)?;
    let rhs = bar.l2_norm_sq(&df)? + bar.l2_norm_sq(&dp)? + 3.0 * bar.l2_norm_sq(&d7)?;
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Serialize)]
pub struct GardingReport {
    pub samples: usize,
    /// min over samples of (⟨−LΩ̇,Ω̇⟩ − ‖ÐΩ̇‖²) / ‖Ω̇‖²_W, with
    /// ‖Ω̇‖²_W = ‖Ω̇‖² + ‖dΩ̇‖² + ‖δΩ̇‖².
    pub worst_margin: f64,
    /// min over samples of ⟨−LΩ̇,Ω̇⟩ / ‖ÐΩ̇‖², the empirical coercivity
    /// constant (samples with ‖ÐΩ̇‖ = 0 skipped).
    pub empirical_constant: f64,
}

/// ⟨−LΩ̇,Ω̇⟩ against ‖ÐΩ̇‖² = ‖dΩ̇‖² + ‖δΩ̇‖² over the given samples.
pub fn garding_check(bar: &StructureField, samples: &[FormField]) -> Result<GardingReport> {
    let mut worst_margin = f64::INFINITY;
    let mut empirical_constant = f64::INFINITY;
    for f in samples {
        let (lhs, _) = quadratic_identity(bar, f)?;
        let dirac = bar.l2_norm_sq(&f.d()?)? + bar.l2_norm_sq(&bar.codiff_adjoint(f)?)?;
        let w = bar.l2_norm_sq(f)? + dirac;
        if w > 0.0 {
            worst_margin = worst_margin.min((lhs - dirac) / w);
        }
        if dirac > 1e-14 * w {
            empirical_constant = empirical_constant.min(lhs / dirac);
        }
    }
    Ok(GardingReport {
        samples: samples.len(),
        worst_margin,
        empirical_constant,
    })
}

/// Eigenvalues of −L (or of the given non-negative operator), ascending.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub kernel_count: usize,
    /// Smallest eigenvalue above the kernel cut.
    pub lambda1: Option<f64>,
    /// Kernel modes carried by nonzero wavevectors whose discrete
    /// wavenumbers all vanish (the Nyquist modes of central stencils).
    pub nyquist_kernel: usize,
}

impl Spectrum {
    fn from_sorted(eigenvalues: Vec<f64>, nyquist_kernel: usize) -> Self {
        let scale = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let cut = KERNEL_CUT * scale;
        let kernel_count = eigenvalues.iter().filter(|e| **e < cut).count();
        let lambda1 = eigenvalues.iter().copied().find(|e| *e >= cut);
        Self {
            eigenvalues,
            kernel_count,
            lambda1,
            nyquist_kernel,
        }
    }

    /// Kernel count with the Nyquist modes removed.
    pub fn harmonic_kernel(&self) -> usize {
        self.kernel_count.saturating_sub(self.nyquist_kernel)
    }
}

/// Number of nonzero wavevectors on `grid` whose discrete wavenumbers all
/// vanish.
fn nyquist_modes(grid: &TorusGrid) -> usize {
    wavevectors(grid)
        .filter(|m| m.iter().any(|k| *k != 0))
        .filter(|m| (0..N).all(|a| grid.multiplier(a, m[a]).abs() < 1e-12))
        .count()
}

fn wavevectors(grid: &TorusGrid) -> impl Iterator<Item = [i64; N]> + '_ {
    let n = grid.n();
    (0..grid.node_count()).map(move |node| {
        let c = grid.coords(node);
        std::array::from_fn(|a| {
            let k = c[a] as i64;
            if 2 * k > n[a] as i64 {
                k - n[a] as i64
            } else {
                k
            }
        })
    })
}

/// Dense symmetric eigensolve of −L (kind L) or of the operator itself.
pub fn spectrum(m: &OperatorMatrix) -> Result<Spectrum> {
    if m.dim() > DENSE_CAP {
        return Err(Error::Capacity {
            dim: m.dim(),
            cap: DENSE_CAP,
        });
    }
    let w = m.weighted();
    let sym = (&w + w.transpose()) * 0.5;
    let sym = if m.kind == OperatorKind::L { -sym } else { sym };
    let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    let nyq = if m.kind == OperatorKind::LambdaStarNormal {
        N * nyquist_modes(m.background.grid())
    } else {
        35 * nyquist_modes(m.background.grid())
    };
    Ok(Spectrum::from_sorted(e, nyq))
}

/// Spectrum of −L at a flat background from its Fourier blocks: on the mode
/// with discrete wavenumbers K the operator acts as the DeTurck symbol at
/// ξ = K. Exact for constant coefficients, with no dense size limit.
pub fn fourier_spectrum(bar: &StructureField) -> Result<Spectrum> {
    require_uniform(bar)?;
    G2Ops::new(bar)?;
    let g = bar.grid();
    let form = Form::from_coeffs(3, bar.omega().node(0).to_vec())?;
    let s = G2Structure::new(&form)?;
    let modes: Vec<[i64; N]> = wavevectors(g).collect();
    let blocks: Vec<Result<Vec<f64>>> = modes
        .par_iter()
        .map(|m| {
            let xi: Vec<f64> = (0..N).map(|a| g.multiplier(a, m[a])).collect();
            if xi.iter().all(|k| k.abs() < 1e-12) {
                return Ok(vec![0.0; 35]);
            }
            let sym = symbol_deturck(&s, &Form::from_coeffs(1, xi)?)?;
            Ok(sym.sym_eigenvalues().iter().map(|e| -e).collect())
        })
        .collect();
    let mut e = Vec::with_capacity(35 * modes.len());
    for b in blocks {
        e.extend(b?);
    }
    e.sort_by(f64::total_cmp);
    Ok(Spectrum::from_sorted(e, 35 * nyquist_modes(g)))
}

/// Ω̇ = Ω̇₀ + L_XΩ̄ with Ω̇₀ L²-orthogonal to the orbit directions.
#[derive(Debug, Clone)]
pub struct SplitResult {
    pub omega0: FormField,
    pub x: VectorField,
    pub lie_part: FormField,
    pub iterations: usize,
    /// ‖λ(Ω̇₀)‖ / ‖λ(Ω̇)‖.
    pub gauge_residual: f64,
    /// |⟨Ω̇₀, L_XΩ̄⟩| / (‖Ω̇₀‖‖L_XΩ̄‖).
    pub orthogonality: f64,
}

/// Solves λλ*X = λΩ̇ by conjugate gradients on the complement of the
/// constant vector fields, then splits Ω̇.
pub fn orbit_slice_split(bar: &StructureField, f: &FormField) -> Result<SplitResult> {
    if f.degree() != 3 || **f.grid() != **bar.grid() {
        return Err(invalid("split needs a 3-form field on the background grid"));
    }
    let m = lambda_star_matrix(bar)?;
    let w = l2_weight(bar);
    let fv = DVector::from_column_slice(f.values());
    let lam = |v: &DVector<f64>| m.tr_mul(&apply_blockwise(&w, v));
    let normal = |x: &DVector<f64>| lam(&(&m * x));
    let nodes = bar.grid().node_count();
    let deflate = |v: &mut DVector<f64>| {
        for k in 0..N {
            let mean = (0..nodes).map(|n| v[n * N + k]).sum::<f64>() / nodes as f64;
            (0..nodes).for_each(|n| v[n * N + k] -= mean);
        }
    };

    let mut rhs = lam(&fv);
    deflate(&mut rhs);
    let rhs_norm = rhs.norm();
    let mut x = DVector::zeros(m.ncols());
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let max_iter = 10 * m.ncols();
    let tol = 1e-13 * rhs_norm;
    let mut iterations = 0;
    while rr.sqrt() > tol && iterations < max_iter {
        let mut ap = normal(&p);
        deflate(&mut ap);
        let alpha = rr / p.dot(&ap);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_new = r.dot(&r);
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
        iterations += 1;
    }
    if rr.sqrt() > tol.max(1e-300) && rhs_norm > 0.0 {
        return Err(Error::Solver {
            iterations,
            residual: rr.sqrt() / rhs_norm,
        });
    }

    let lie = &m * &x;
    let lie_part = FormField::from_values(bar.grid(), 3, lie.as_slice().to_vec())?;
    let omega0 = f.sub(&lie_part);
    let o0 = DVector::from_column_slice(omega0.values());
    let gauge = lam(&o0).norm();
    let full = lam(&fv).norm();
    let gauge_residual = if full > 0.0 { gauge / full } else { gauge };
    let ip = bar.l2_inner(&omega0, &lie_part)?;
    let denom = (bar.l2_norm_sq(&omega0)? * bar.l2_norm_sq(&lie_part)?).sqrt();
    let orthogonality = if denom > 0.0 { ip.abs() / denom } else { 0.0 };
    let x = VectorField::from_components(FormField::from_values(bar.grid(), 1, x.as_slice().to_vec())?)?;
    Ok(SplitResult {
        omega0,
        x,
        lie_part,
        iterations,
        gauge_residual,
        orthogonality,
    })
}
