//! `g2flow`: run invariant suites, flows and spectra from a key=value config.
//!
//! Exit status: 0 when every check passes (suite), the flow converges
//! (flow) or the harmonic kernel has dimension 35 (spectrum); 1 when the
//! run completes without meeting that bar; 2 on usage or runtime errors.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use g2flow::config::RunConfig;
use g2flow::flow::{run, FlowStatus};
use g2flow::calculus::StructureField;
use g2flow::g2::standard::normal_form;
use g2flow::operator::fourier_spectrum;
use g2flow::suite::{run_suite, SuiteName, SuiteOptions};
use g2flow::Error;
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "g2flow", version, about = "G2-structure flows and invariant checks on the flat 7-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key = value configuration file; absent keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides init.seed and seeds the suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides out.path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces the tolerance of roundoff-level suite checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one invariant battery: algebra, fields, symbols or spectrum.
    Suite { name: SuiteName },
    /// Integrate the configured flow and write its trace.
    Flow,
    /// Spectrum of the linearised DeTurck operator on the configured grid.
    Spectrum,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RunConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.init_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_path = o.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn write_json(dir: &Path, name: &str, value: serde_json::Value) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn suite(cfg: &RunConfig, name: SuiteName, cli: &Cli, dir: &Path) -> Result<bool> {
    let opts = SuiteOptions {
        seed: cfg.init_seed,
        tol: cli.tol,
        ..SuiteOptions::default()
    };
    let report = run_suite(name, cfg, &opts)?;
    let file = format!("suite_{}.json", serde_json::to_value(name)?.as_str().unwrap_or("suite"));
    write_json(dir, &file, serde_json::to_value(&report)?)?;
    print!("{}", report.table());
    Ok(report.passed)
}

fn flow(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let init = match cfg.initial_field() {
        Ok(init) => init,
        // a non-positive start is a terminal outcome, not a usage error
        Err(e @ (Error::NotPositive { .. } | Error::PositivityLoss { .. })) => {
            write_json(
                dir,
                "summary.json",
                json!({
                    "status": FlowStatus::PositivityLoss,
                    "accepted_steps": 0,
                    "rejected_steps": 0,
                    "detail": format!("initial field: {e}"),
                    "config": cfg.to_json(),
                }),
            )?;
            println!("status positivity_loss before the first step: {e}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    let started = Instant::now();
    let trace = run(init, &cfg.flow_config())?;
    let wall = started.elapsed().as_secs_f64();

    let mut csv = fs::File::create(dir.join("trace.csv"))?;
    for (k, v) in cfg.entries() {
        writeln!(csv, "# {k} = {v}")?;
    }
    trace.write_csv(&mut csv)?;
    let last = trace.last();
    write_json(
        dir,
        "summary.json",
        json!({
            "status": trace.status,
            "accepted_steps": trace.accepted,
            "rejected_steps": trace.rejected,
            "final": last,
            "config": cfg.to_json(),
        }),
    )?;
    // wall time varies between runs, so it stays out of the deterministic outputs
    eprintln!("wall time {wall:.2} s");
    println!(
        "status {} after {} steps (t = {:.6}), |dΩ| = {:.3e}, |δΩ| = {:.3e}",
        serde_json::to_value(trace.status)?.as_str().unwrap_or("?"),
        trace.accepted,
        last.t,
        last.torsion_d,
        last.torsion_delta
    );
    Ok(trace.status == FlowStatus::Converged)
}

fn spectrum(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let bar = StructureField::flat(&cfg.grid()?, &normal_form())?;
    let spec = fourier_spectrum(&bar)?;
    let harmonic = spec.harmonic_kernel();
    write_json(
        dir,
        "spectrum.json",
        json!({
            "lambda1": spec.lambda1,
            "kernel_count": spec.kernel_count,
            "nyquist_kernel": spec.nyquist_kernel,
            "harmonic_kernel": harmonic,
            "eigenvalues": spec.eigenvalues,
            "config": cfg.to_json(),
        }),
    )?;
    println!(
        "lambda1 {:?}, kernel {} ({} harmonic, {} Nyquist)",
        spec.lambda1, spec.kernel_count, harmonic, spec.nyquist_kernel
    );
    Ok(harmonic == 35)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load_config(&cli).and_then(|cfg| {
        let dir = PathBuf::from(&cfg.out_path);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        match &cli.command {
            Command::Suite { name } => suite(&cfg, *name, &cli, &dir),
            Command::Flow => flow(&cfg, &dir),
            Command::Spectrum => spectrum(&cfg, &dir),
        }
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
