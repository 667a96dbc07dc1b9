//! End-to-end paths through the public API: config, initial field, flow,
//! trace and field serialization.

use approx::assert_relative_eq;
use g2flow::energy::dirichlet;
use g2flow::flow::{run, FlowKind, TRACE_COLUMNS};
use g2flow::io::{read_field, write_field};
use g2flow::suite::{run_suite, SuiteName, SuiteOptions};
use g2flow::{FlowStatus, RunConfig, StructureField};

fn small(extra: &str) -> RunConfig {
    RunConfig::parse(&format!("grid.n1 = 6\ngrid.n2 = 5\n{extra}")).unwrap()
}

#[test]
fn short_deturck_run_writes_a_consistent_trace() {
    let cfg = small("flow.t_max = 0.05\ninit.eps = 0.02");
    let trace = run(cfg.initial_field().unwrap(), &cfg.flow_config()).unwrap();
    assert_eq!(trace.status, FlowStatus::TMax);
    assert_eq!(trace.records.len(), trace.accepted + 1);
    for w in trace.records.windows(2) {
        assert!(w[1].t > w[0].t && w[1].step == w[0].step + 1);
        assert!(w[1].grad_q_tilde < w[0].grad_q_tilde);
    }

    let mut csv = Vec::new();
    trace.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRACE_COLUMNS));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), trace.records.len());
    let last = trace.last();
    assert_eq!(rows.last().unwrap()[3], last.dirichlet);
    assert_eq!(rows.last().unwrap()[1], last.t);
}

#[test]
fn serialized_state_reproduces_its_diagnostics() {
    let cfg = small("flow.t_max = 0.02");
    let s = cfg.initial_field().unwrap();
    let mut buf = Vec::new();
    write_field(s.omega(), &mut buf).unwrap();
    let back = StructureField::new(read_field(buf.as_slice()).unwrap()).unwrap();
    assert_eq!(dirichlet(&back).unwrap(), dirichlet(&s).unwrap());
    let a = run(s, &cfg.flow_config()).unwrap();
    let b = run(back, &cfg.flow_config()).unwrap();
    assert_eq!(a.last().dirichlet, b.last().dirichlet);
}

#[test]
fn closed_start_keeps_its_hitchin_volume_to_first_order() {
    // the first variation along dβ is ∫Θ̄∧dβ/3, zero by Stokes since Θ̄ is closed
    let h = |eps: f64| small(&format!("init.kind = flat_plus_exact\ninit.eps = {eps}")).initial_field().unwrap().hitchin();
    let h0 = h(0.0);
    let (d1, d2) = ((h(1e-3) - h0).abs(), (h(5e-4) - h0).abs());
    assert!(d1 / d2 > 3.5, "{d1} {d2}");
}

#[test]
fn laplacian_flow_from_a_non_closed_start_ends_in_a_documented_status() {
    let mut cfg = small("init.eps = 0.05\nflow.t_max = 0.5");
    cfg.flow_kind = FlowKind::Laplacian;
    let trace = run(cfg.initial_field().unwrap(), &cfg.flow_config()).unwrap();
    assert!(matches!(
        trace.status,
        FlowStatus::TMax | FlowStatus::Converged | FlowStatus::PositivityLoss | FlowStatus::StepFloor
    ));
    assert!(trace.records.iter().all(|r| r.min_metric_eig > 0.0));
}

#[test]
fn suite_reports_depend_only_on_their_inputs() {
    let opts = SuiteOptions {
        seed: 9,
        symbol_samples: 16,
        ..SuiteOptions::default()
    };
    let cfg = RunConfig::default();
    let a = serde_json::to_string(&run_suite(SuiteName::Symbols, &cfg, &opts).unwrap()).unwrap();
    let b = serde_json::to_string(&run_suite(SuiteName::Symbols, &cfg, &opts).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scaled_structures_have_scaled_energy() {
    let base = small("init.eps = 0.03").initial_field().unwrap();
    let scaled = StructureField::new(base.omega().scale(1.7)).unwrap();
    assert_relative_eq!(dirichlet(&scaled).unwrap(), 1.7f64.powf(5.0 / 3.0) * dirichlet(&base).unwrap(), max_relative = 1e-12);
}
