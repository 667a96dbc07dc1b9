//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Criterion 7 integrates the full default flow and takes
//! a few minutes in release-level builds.

use g2flow::deturck::remainder;
use g2flow::dpq::TrigSpec;
use g2flow::exterior::pullback;
use g2flow::flow::{decay_fit, run, FlowKind, FlowRunner};
use g2flow::g2::standard::normal_form;
use g2flow::operator::fourier_spectrum;
use g2flow::rng::SeededRng;
use g2flow::suite::{algebra_checks, field_checks, spectrum_checks, symbol_checks, Check, SuiteOptions};
use g2flow::{FlowConfig, FlowStatus, FormField, Result, RunConfig, StructureField};
use std::process::ExitCode;
use std::time::Instant;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn of(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }

    /// All checks must pass; the detail names the failures or the worst value.
    fn from_checks<'a>(checks: impl IntoIterator<Item = &'a Check>) -> Self {
        let checks: Vec<&Check> = checks.into_iter().collect();
        let failed: Vec<String> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} worst {:.2e} > {:.0e}", c.name, c.worst, c.tolerance))
            .collect();
        if failed.is_empty() {
            let worst = checks.iter().map(|c| c.worst).fold(f64::NEG_INFINITY, f64::max);
            Self::of(true, format!("{} checks, worst {worst:.2e}", checks.len()))
        } else {
            Self::of(false, failed.join("; "))
        }
    }
}

fn named<'a>(checks: &'a [Check], names: &'a [&str]) -> impl Iterator<Item = &'a Check> + 'a {
    checks.iter().filter(move |c| names.contains(&c.name.as_str()))
}

fn criterion_1(opts: &SuiteOptions, algebra: &[Check], secs: f64) -> Verdict {
    let mut v = Verdict::from_checks(algebra.iter().filter(|c| !c.name.ends_with("_scaling")));
    v.detail = format!("{} samples, {}, {secs:.2} s", opts.algebra_samples, v.detail);
    v.passed &= secs <= 60.0;
    v
}

fn criterion_3(fields: &[Check]) -> Verdict {
    let mut v = Verdict::from_checks(named(fields, &["gradient_gate", "euler_identity_discrete", "euler_identity_order"]));
    if let Some(r) = fields.iter().find(|c| c.name == "euler_identity_order").and_then(|c| c.measured) {
        v.detail = format!("{}, Euler order {r:.2}", v.detail);
    }
    v
}

fn criterion_4(fields: &[Check]) -> Verdict {
    let rows: Vec<&Check> = fields
        .iter()
        .filter(|c| !matches!(c.name.as_str(), "gradient_gate" | "energy_scaling") && !c.name.starts_with("euler_"))
        .collect();
    let rates: Vec<f64> = rows.iter().filter_map(|c| c.measured).collect();
    let mut v = Verdict::from_checks(rows);
    if !rates.is_empty() {
        let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        v.detail = format!("{}, rates in [{lo:.2}, {hi:.2}]", v.detail);
    }
    v
}

/// The default stop rule (1e-8 of the initial norm) halts near 1.5e-6 in
/// torsion here, because the norms carry the volume of the collapsed axes;
/// the run continues two more decades so the torsion bound is reachable.
const STABILITY_STOP_TOL: f64 = 1e-10;

fn criterion_7(cfg: &RunConfig) -> Result<Verdict> {
    let cfg = &RunConfig {
        stop_grad_tol: STABILITY_STOP_TOL,
        ..cfg.clone()
    };
    let bar = StructureField::flat(&cfg.grid()?, &normal_form())?;
    let lambda1 = fourier_spectrum(&bar)?.lambda1.unwrap_or(f64::NAN);
    let started = Instant::now();
    let trace = run(cfg.initial_field()?, &cfg.flow_config())?;
    let secs = started.elapsed().as_secs_f64();
    let last = trace.last();
    let torsion = last.torsion_d + last.torsion_delta;
    let window = (trace.records.len() / 4).max(5);
    let (rate, r2) = decay_fit(&trace, window).unwrap_or((f64::NAN, f64::NAN));
    let passed = trace.status == FlowStatus::Converged
        && trace.accepted <= 100_000
        && secs <= 600.0
        && torsion <= 1e-6
        && rate >= lambda1 / 2.0
        && rate >= 1.6 * lambda1;
    Ok(Verdict::of(
        passed,
        format!(
            "{:?} at stop_grad_tol {:.0e} after {} steps, {secs:.0} s, |dΩ|+|δΩ| = {torsion:.2e}, rate {rate:.4} (r² {r2:.5}) vs λ₁ {lambda1:.4}",
            trace.status, cfg.stop_grad_tol, trace.accepted
        ),
    ))
}

/// Ratios ‖R(εw)‖/‖R(εw/2)‖ about constant torsion-free points Ω′ = A*Ω̄.
fn criterion_8(cfg: &RunConfig, seed: u64) -> Result<Verdict> {
    let grid = cfg.grid()?;
    let bar = StructureField::flat(&grid, &normal_form())?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..10 {
        let mut rng = SeededRng::new(seed.wrapping_add(i));
        let prime = StructureField::flat(&grid, &pullback(&normal_form(), &rng.gl_plus(0.1)))?;
        let w = TrigSpec::new(&mut rng, 3, &grid).sample(&grid, 3);
        let norm = |eps: f64| -> Result<f64> { Ok(prime.l2_norm_sq(&remainder(&bar, &prime, &w, eps)?)?.sqrt()) };
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let ratio = norm(eps)? / norm(eps / 2.0)?;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    Ok(Verdict::of(lo >= 3.6 && hi <= 4.4, format!("ratios in [{lo:.4}, {hi:.4}] over 10 fields")))
}

fn criterion_10(cfg: &RunConfig, seed: u64) -> Result<Verdict> {
    let dirichlet = FlowConfig {
        kind: FlowKind::Dirichlet,
        max_steps: 60,
        ..FlowConfig::default()
    };
    let mut rises = 0;
    let mut steps = 0;
    for i in 0..5 {
        let mut c = cfg.clone();
        c.init_seed = seed.wrapping_add(i);
        let trace = run(c.initial_field()?, &dirichlet)?;
        steps += trace.accepted;
        rises += trace.records.windows(2).filter(|w| w[1].dirichlet > w[0].dirichlet).count();
    }
    let grid = cfg.grid()?;
    let mut drift: f64 = 0.0;
    for lambda in [1.0, 0.5, 2.0] {
        let start = StructureField::flat(&grid, &normal_form().scale(lambda))?;
        for kind in [FlowKind::Dirichlet, FlowKind::Deturck] {
            let mut r = FlowRunner::new(start.clone(), FlowConfig { kind, ..FlowConfig::default() })?;
            for _ in 0..3 {
                let before: FormField = r.state().omega().clone();
                r.step()?;
                drift = drift.max(r.state().omega().sub(&before).max_abs());
            }
        }
    }
    Ok(Verdict::of(
        rises == 0 && drift <= 1e-12,
        format!("{rises} energy rises over {steps} Dirichlet steps, fixed-point drift {drift:.1e} per step"),
    ))
}

type Outcome = std::result::Result<Verdict, String>;

fn report(id: usize, title: &str, outcome: Outcome) -> bool {
    let v = outcome.unwrap_or_else(|e| Verdict::of(false, format!("error: {e}")));
    println!("{} {id:>2} {title}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    v.passed
}

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let opts = SuiteOptions::default();
    let seed = opts.seed;

    let started = Instant::now();
    let algebra = algebra_checks(&opts).map_err(|e| e.to_string());
    let algebra_secs = started.elapsed().as_secs_f64();
    let fields = field_checks(&cfg, &opts).map_err(|e| e.to_string());
    let spectrum = spectrum_checks(&cfg, &opts).map_err(|e| e.to_string());

    let split_names = ["split_orthogonality", "split_gauge"];
    let results = [
        report(1, "algebra battery", algebra.as_ref().map(|a| criterion_1(&opts, a, algebra_secs)).map_err(Clone::clone)),
        report(
            2,
            "scaling laws",
            algebra.as_ref().map_err(Clone::clone).and_then(|a| {
                let f = fields.as_ref().map_err(Clone::clone)?;
                Ok(Verdict::from_checks(named(a, &["volume_scaling", "star_scaling"]).chain(named(f, &["energy_scaling"]))))
            }),
        ),
        report(3, "gradient gate and Euler identity", fields.as_ref().map(|f| criterion_3(f)).map_err(Clone::clone)),
        report(4, "first-order identities and refinement rates", fields.as_ref().map(|f| criterion_4(f)).map_err(Clone::clone)),
        report(5, "symbol battery", symbol_checks(&opts).map(|s| Verdict::from_checks(&s)).map_err(|e| e.to_string())),
        report(
            6,
            "linearisation",
            spectrum
                .as_ref()
                .map(|s| Verdict::from_checks(s.iter().filter(|c| !split_names.contains(&c.name.as_str()))))
                .map_err(Clone::clone),
        ),
        report(7, "stability of the DeTurck flow", criterion_7(&cfg).map_err(|e| e.to_string())),
        report(8, "remainder quadraticity", criterion_8(&cfg, seed).map_err(|e| e.to_string())),
        report(9, "orbit/slice split", spectrum.as_ref().map(|s| Verdict::from_checks(named(s, &split_names))).map_err(Clone::clone)),
        report(10, "Dirichlet monotonicity and fixed points", criterion_10(&cfg, seed).map_err(|e| e.to_string())),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
