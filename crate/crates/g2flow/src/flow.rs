//! Explicit time integration of the Dirichlet, DeTurck and Laplacian flows
//! with a symbol-based step bound, positivity and energy safeguards, and a
//! per-step diagnostic trace.

use crate::calculus::StructureField;
use crate::deturck::{deturck_vector_field, lie_derivative};
use crate::energy::{dirichlet, gradient_q, laplacian_flow_rhs};
use crate::error::{invalid, Error, Result};
use crate::exterior::{Form, N};
use crate::field::FormField;
use crate::g2::{standard::normal_form, G2Structure};
use crate::symbol::{symbol_deturck, symbol_gradient, symbol_laplacian_flow};
use serde::Serialize;
use std::io::Write;
use std::sync::OnceLock;

/// Steps are never shorter than this.
pub const DT_MIN: f64 = 1e-12;

/// Convergence must hold for this many consecutive records.
pub const STOP_WINDOW: usize = 10;

/// Accepted energy increase per Dirichlet step, relative to |D|.
const ENERGY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// ∂Ω/∂t = Q(Ω).
    Dirichlet,
    /// ∂Ω/∂t = Q̃_Ω̄(Ω).
    Deturck,
    /// ∂Ω/∂t = Δ_Ω Ω.
    Laplacian,
}

impl std::str::FromStr for FlowKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(Self::Dirichlet),
            "deturck" => Ok(Self::Deturck),
            "laplacian" => Ok(Self::Laplacian),
            _ => Err(invalid(format!("unknown flow kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowConfig {
    pub kind: FlowKind,
    /// Constant torsion-free background Ω̄ for the gauge term.
    #[serde(skip)]
    pub background: Form<f64>,
    pub dt_safety: f64,
    pub t_max: f64,
    /// Relative to the initial norm of the right-hand side.
    pub stop_grad_tol: f64,
    pub max_steps: usize,
    pub integrator: Integrator,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            kind: FlowKind::Deturck,
            background: normal_form(),
            dt_safety: 0.2,
            t_max: 100.0,
            stop_grad_tol: 1e-8,
            max_steps: 100_000,
            integrator: Integrator::Euler,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety < 1.0) {
            return Err(invalid("dt_safety must lie in (0, 1)"));
        }
        if !(self.t_max > 0.0) || !(self.stop_grad_tol > 0.0) {
            return Err(invalid("t_max and stop_grad_tol must be positive"));
        }
        if self.background.degree() != 3 {
            return Err(invalid("the background must be a 3-form"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Running,
    Converged,
    TMax,
    /// The configured step budget ran out first.
    MaxSteps,
    PositivityLoss,
    StepFloor,
}

/// One row of the trace; the state after `step` accepted steps.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Record {
    pub step: usize,
    pub t: f64,
    /// Step that produced this state (0 for the initial record).
    pub dt: f64,
    pub dirichlet: f64,
    pub hitchin: f64,
    pub grad_q: f64,
    pub grad_q_tilde: f64,
    pub torsion_d: f64,
    pub torsion_delta: f64,
    pub min_metric_eig: f64,
}

pub const TRACE_COLUMNS: &str = "step,t,dt,D,H,norm_Q,norm_Q_tilde,norm_dOmega,norm_deltaOmega,min_metric_eig";

#[derive(Debug, Clone, Serialize)]
pub struct FlowTrace {
    pub records: Vec<Record>,
    pub status: FlowStatus,
    pub accepted: usize,
    pub rejected: usize,
}

impl FlowTrace {
    pub fn last(&self) -> &Record {
        self.records.last().expect("a trace holds at least the initial record")
    }

    /// CSV with header TRACE_COLUMNS and one row per record.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{TRACE_COLUMNS}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.step, r.t, r.dt, r.dirichlet, r.hitchin, r.grad_q, r.grad_q_tilde, r.torsion_d, r.torsion_delta, r.min_metric_eig
            )?;
        }
        Ok(())
    }
}

/// Spectral norm of each flow's symbol at |ξ|_g = 1. The symbols are
/// GL-equivariant, so one evaluation at the normal form covers every
/// positive form.
fn symbol_bound(kind: FlowKind) -> f64 {
    static BOUNDS: OnceLock<[f64; 3]> = OnceLock::new();
    let b = BOUNDS.get_or_init(|| {
        let s = G2Structure::standard();
        let xi = Form::basis(&[N]);
        [
            symbol_gradient(&s, &xi).expect("unit ξ").class.sigma_max,
            symbol_deturck(&s, &xi).expect("unit ξ").class.sigma_max,
            symbol_laplacian_flow(&s, &xi).expect("unit ξ").class.sigma_max,
        ]
    });
    match kind {
        FlowKind::Dirichlet => b[0],
        FlowKind::Deturck => b[1],
        FlowKind::Laplacian => b[2],
    }
}

/// dt = dt_safety · h_min² / S with S = c · max λ(g⁻¹) · Σ_active (ρ h_min/h_a)²,
/// c the symbol bound and ρ the stencil's wavenumber bound.
pub fn cfl_dt(s: &StructureField, kind: FlowKind, dt_safety: f64) -> f64 {
    let g = s.grid();
    let h = g.spacing();
    let hmin = g.min_spacing();
    let rho = g.stencil_radius();
    let axes: f64 = g.active_axes().iter().map(|&a| (rho * hmin / h[a]).powi(2)).sum();
    if axes == 0.0 {
        return f64::INFINITY;
    }
    let bound = symbol_bound(kind) * s.max_inverse_metric_eigenvalue() * axes;
    dt_safety * hmin * hmin / bound
}

/// A state with its right-hand side and diagnostics.
#[derive(Debug, Clone)]
struct Evaluated {
    s: StructureField,
    rhs: FormField,
    diag: Record,
}

fn evaluate(kind: FlowKind, bar: &StructureField, s: StructureField) -> Result<Evaluated> {
    let q = gradient_q(&s)?;
    let x = deturck_vector_field(bar, s.omega())?;
    let mut qt = q.clone();
    qt.axpy(1.0, &lie_derivative(&x, s.omega())?);
    let (td, tdelta) = s.torsion_norms()?;
    let diag = Record {
        step: 0,
        t: 0.0,
        dt: 0.0,
        dirichlet: dirichlet(&s)?,
        hitchin: s.hitchin(),
        grad_q: s.l2_norm_sq(&q)?.sqrt(),
        grad_q_tilde: s.l2_norm_sq(&qt)?.sqrt(),
        torsion_d: td,
        torsion_delta: tdelta,
        min_metric_eig: s.min_metric_eigenvalue(),
    };
    let rhs = match kind {
        FlowKind::Dirichlet => q,
        FlowKind::Deturck => qt,
        FlowKind::Laplacian => laplacian_flow_rhs(&s)?,
    };
    Ok(Evaluated { s, rhs, diag })
}

fn rhs_only(kind: FlowKind, bar: &StructureField, s: &StructureField) -> Result<FormField> {
    match kind {
        FlowKind::Dirichlet => gradient_q(s),
        FlowKind::Deturck => crate::deturck::q_tilde(bar, s),
        FlowKind::Laplacian => laplacian_flow_rhs(s),
    }
}

fn shifted(base: &FormField, c: f64, dir: &FormField) -> FormField {
    let mut out = base.clone();
    out.axpy(c, dir);
    out
}

/// Outcome of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub dt: f64,
    pub rejections: usize,
}

/// Owns the evolving state; each `step` advances it by one accepted step.
pub struct FlowRunner {
    cfg: FlowConfig,
    bar: StructureField,
    current: Evaluated,
    steps: usize,
    rejected: usize,
}

impl FlowRunner {
    pub fn new(init: StructureField, cfg: FlowConfig) -> Result<Self> {
        cfg.validate()?;
        let bar = StructureField::uniform(init.grid(), &cfg.background)?;
        let current = evaluate(cfg.kind, &bar, init)?;
        Ok(Self {
            cfg,
            bar,
            current,
            steps: 0,
            rejected: 0,
        })
    }

    pub fn state(&self) -> &StructureField {
        &self.current.s
    }

    pub fn record(&self) -> Record {
        self.current.diag
    }

    /// ‖right-hand side‖ in L² at the current state.
    pub fn monitored(&self) -> f64 {
        match self.cfg.kind {
            FlowKind::Dirichlet => self.current.diag.grad_q,
            FlowKind::Deturck => self.current.diag.grad_q_tilde,
            FlowKind::Laplacian => self.current.s.l2_norm_sq(&self.current.rhs).map(f64::sqrt).unwrap_or(f64::NAN),
        }
    }

    fn candidate(&self, dt: f64) -> Result<StructureField> {
        let s = &self.current.s;
        let y = s.omega();
        let next = match self.cfg.integrator {
            Integrator::Euler => shifted(y, dt, &self.current.rhs),
            Integrator::Rk4 => {
                let (k, b) = (self.cfg.kind, &self.bar);
                let k1 = &self.current.rhs;
                let k2 = rhs_only(k, b, &StructureField::new(shifted(y, dt / 2.0, k1))?)?;
                let k3 = rhs_only(k, b, &StructureField::new(shifted(y, dt / 2.0, &k2))?)?;
                let k4 = rhs_only(k, b, &StructureField::new(shifted(y, dt, &k3))?)?;
                let mut out = y.clone();
                out.axpy(dt / 6.0, k1);
                out.axpy(dt / 3.0, &k2);
                out.axpy(dt / 3.0, &k3);
                out.axpy(dt / 6.0, &k4);
                out
            }
        };
        StructureField::new(next)
    }

    /// One accepted step, halving dt on positivity loss or (Dirichlet kind)
    /// energy increase until DT_MIN.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let mut dt = cfl_dt(&self.current.s, self.cfg.kind, self.cfg.dt_safety);
        let mut rejections = 0;
        loop {
            let attempt = self
                .candidate(dt)
                .and_then(|s| evaluate(self.cfg.kind, &self.bar, s));
            let failure = match attempt {
                Ok(next) => {
                    let d0 = self.current.diag.dirichlet;
                    let rises = self.cfg.kind == FlowKind::Dirichlet && next.diag.dirichlet > d0 + ENERGY_SLACK * d0.abs();
                    if !rises {
                        self.steps += 1;
                        let t = self.current.diag.t + dt;
                        self.current = next;
                        self.current.diag.step = self.steps;
                        self.current.diag.t = t;
                        self.current.diag.dt = dt;
                        return Ok(StepOutcome { dt, rejections });
                    }
                    Error::StepFloor { dt_min: DT_MIN }
                }
                Err(e @ Error::PositivityLoss { .. }) => e,
                Err(e) => return Err(e),
            };
            rejections += 1;
            self.rejected += 1;
            dt /= 2.0;
            if dt < DT_MIN {
                return Err(failure);
            }
        }
    }
}

/// Iterates until the right-hand side stays below stop_grad_tol times its
/// initial norm for STOP_WINDOW records, t reaches t_max, the step budget
/// runs out, or a step fails.
pub fn run(init: StructureField, cfg: &FlowConfig) -> Result<FlowTrace> {
    let mut runner = FlowRunner::new(init, cfg.clone())?;
    let mut records = vec![runner.record()];
    let g0 = runner.monitored();
    let floor = 1e-14 * (1.0 + runner.state().l2_norm_sq(runner.state().omega())?.sqrt());
    let tol = cfg.stop_grad_tol * g0;
    let mut below = 0;
    let status = if g0 <= floor {
        FlowStatus::Converged
    } else {
        loop {
            if runner.record().t >= cfg.t_max {
                break FlowStatus::TMax;
            }
            if runner.steps >= cfg.max_steps {
                break FlowStatus::MaxSteps;
            }
            match runner.step() {
                Ok(_) => {}
                Err(Error::PositivityLoss { .. }) => break FlowStatus::PositivityLoss,
                Err(Error::StepFloor { .. }) => break FlowStatus::StepFloor,
                Err(e) => return Err(e),
            }
            records.push(runner.record());
            let m = runner.monitored();
            below = if m < tol || m <= floor { below + 1 } else { 0 };
            if below >= STOP_WINDOW {
                break FlowStatus::Converged;
            }
        }
    };
    Ok(FlowTrace {
        records,
        status,
        accepted: runner.steps,
        rejected: runner.rejected,
    })
}

/// Least-squares slope of log‖Q̃_t‖² against t over the last `window`
/// records: returns (decay rate = −slope, r²).
pub fn decay_fit(trace: &FlowTrace, window: usize) -> Result<(f64, f64)> {
    if window < 5 {
        return Err(invalid("decay fit needs a window of at least 5 records"));
    }
    let pts: Vec<(f64, f64)> = trace
        .records
        .iter()
        .filter(|r| r.grad_q_tilde > 0.0)
        .map(|r| (r.t, (r.grad_q_tilde * r.grad_q_tilde).ln()))
        .collect();
    if pts.len() < window {
        return Err(invalid(format!("trace has {} usable records, window is {window}", pts.len())));
    }
    let tail = &pts[pts.len() - window..];
    let n = tail.len() as f64;
    let mt = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = tail.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = tail.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = tail.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sty / stt;
    let r2 = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    Ok((-slope, r2))
}
