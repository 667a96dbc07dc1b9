//! Benchmark fixtures shared by the criterion targets.

use g2flow::RunConfig;
use g2flow::StructureField;

/// The default seeded start (Ω̄ plus a small trigonometric perturbation) on an n×n grid.
pub fn perturbed(n: usize) -> StructureField {
    let mut cfg = RunConfig::default();
    cfg.grid_n[0] = n;
    cfg.grid_n[1] = n;
    cfg.initial_field().expect("the default start is positive")
}
