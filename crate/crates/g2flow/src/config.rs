//! Run configuration: strict `key = value` text with documented defaults.
//!
//! Blank lines and text after `#` are ignored. Every key may appear at most
//! once; unknown keys, duplicate keys and unparsable values are errors that
//! carry the 1-based line and column of the offending token.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `grid.n1` .. `grid.n7` | 16, 16, 1, 1, 1, 1, 1 | nodes per axis |
//! | `grid.l1` .. `grid.l7` | 2π | period per axis |
//! | `fd.order` | 4 | central stencil order, 2 or 4 |
//! | `flow.kind` | `deturck` | `dirichlet`, `deturck` or `laplacian` |
//! | `flow.dt_safety` | 0.2 | step safety factor in (0, 1) |
//! | `flow.t_max` | 100 | final time |
//! | `flow.stop_grad_tol` | 1e-8 | stop threshold relative to the initial rhs norm |
//! | `init.kind` | `flat_plus_random` | `flat`, `flat_plus_random`, `flat_plus_exact`, `scaled` |
//! | `init.eps` | 0.01 | perturbation size; the factor λ for `scaled` |
//! | `init.seed` | 0 | seed of the perturbation |
//! | `out.path` | `out` | output directory |

use crate::calculus::StructureField;
use crate::dpq::TrigSpec;
use crate::error::{Error, Result};
use crate::exterior::N;
use crate::flow::{FlowConfig, FlowKind};
use crate::g2::standard::normal_form;
use crate::grid::TorusGrid;
use crate::rng::SeededRng;
use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// The normal form Ω̄ at every node.
    Flat,
    /// Ω̄ plus eps times seeded wavenumber-one trigonometric modes.
    FlatPlusRandom,
    /// Ω̄ plus eps·dβ for a seeded trigonometric 2-form β.
    FlatPlusExact,
    /// eps·Ω̄.
    Scaled,
}

impl InitKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Flat => "flat",
            Self::FlatPlusRandom => "flat_plus_random",
            Self::FlatPlusExact => "flat_plus_exact",
            Self::Scaled => "scaled",
        }
    }
}

impl FromStr for InitKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Self::Flat, Self::FlatPlusRandom, Self::FlatPlusExact, Self::Scaled]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown init kind '{s}'"))
    }
}

fn kind_name(k: FlowKind) -> &'static str {
    match k {
        FlowKind::Dirichlet => "dirichlet",
        FlowKind::Deturck => "deturck",
        FlowKind::Laplacian => "laplacian",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid_n: [usize; N],
    pub grid_l: [f64; N],
    pub fd_order: usize,
    pub flow_kind: FlowKind,
    pub dt_safety: f64,
    pub t_max: f64,
    pub stop_grad_tol: f64,
    pub init_kind: InitKind,
    pub init_eps: f64,
    pub init_seed: u64,
    pub out_path: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_n: [16, 16, 1, 1, 1, 1, 1],
            grid_l: [TAU; N],
            fd_order: 4,
            flow_kind: FlowKind::Deturck,
            dt_safety: 0.2,
            t_max: 100.0,
            stop_grad_tol: 1e-8,
            init_kind: InitKind::FlatPlusRandom,
            init_eps: 1e-2,
            init_seed: 0,
            out_path: "out".into(),
        }
    }
}

fn parse_value<V: FromStr>(raw: &str) -> std::result::Result<V, String>
where
    V::Err: std::fmt::Display,
{
    raw.parse::<V>().map_err(|e| format!("cannot parse '{raw}': {e}"))
}

fn positive(v: f64) -> std::result::Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive finite number, got {v}"))
    }
}

impl RunConfig {
    /// Strict parse; absent keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let err = |column: usize, message: String| Error::Config { line, column, message };
            let key_col = content.len() - content.trim_start().len() + 1;
            let Some(eq) = content.find('=') else {
                return Err(err(key_col, "expected 'key = value'".into()));
            };
            let key = content[..eq].trim();
            let value_part = &content[eq + 1..];
            let value = value_part.trim();
            let value_col = eq + 2 + (value_part.len() - value_part.trim_start().len());
            if !seen.insert(key.to_string()) {
                return Err(err(key_col, format!("duplicate key '{key}'")));
            }
            if value.is_empty() {
                return Err(err(value_col, format!("missing value for '{key}'")));
            }
            cfg.set(key, value).map_err(|(on_key, m)| err(if on_key { key_col } else { value_col }, m))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Err((true, _)) blames the key, Err((false, _)) the value.
    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), (bool, String)> {
        let v = |r: std::result::Result<(), String>| r.map_err(|m| (false, m));
        if let Some(axis) = key.strip_prefix("grid.n").and_then(axis_index) {
            return v(parse_value::<usize>(value).and_then(|n| {
                if n == 0 {
                    Err("axes need at least one node".into())
                } else {
                    self.grid_n[axis] = n;
                    Ok(())
                }
            }));
        }
        if let Some(axis) = key.strip_prefix("grid.l").and_then(axis_index) {
            return v(parse_value(value).and_then(positive).map(|l| self.grid_l[axis] = l));
        }
        match key {
            "fd.order" => v(parse_value::<usize>(value).and_then(|o| match o {
                2 | 4 => {
                    self.fd_order = o;
                    Ok(())
                }
                _ => Err(format!("fd.order must be 2 or 4, got {o}")),
            })),
            "flow.kind" => v(value.parse::<FlowKind>().map(|k| self.flow_kind = k).map_err(|e| e.to_string())),
            "flow.dt_safety" => v(parse_value::<f64>(value).and_then(|d| {
                if d > 0.0 && d < 1.0 {
                    self.dt_safety = d;
                    Ok(())
                } else {
                    Err(format!("flow.dt_safety must lie in (0, 1), got {d}"))
                }
            })),
            "flow.t_max" => v(parse_value(value).and_then(positive).map(|t| self.t_max = t)),
            "flow.stop_grad_tol" => v(parse_value(value).and_then(positive).map(|t| self.stop_grad_tol = t)),
            "init.kind" => v(value.parse().map(|k| self.init_kind = k)),
            "init.eps" => v(parse_value::<f64>(value).and_then(|e| {
                if e.is_finite() && e >= 0.0 {
                    self.init_eps = e;
                    Ok(())
                } else {
                    Err(format!("init.eps must be finite and non-negative, got {e}"))
                }
            })),
            "init.seed" => v(parse_value(value).map(|s| self.init_seed = s)),
            "out.path" => {
                self.out_path = value.to_string();
                Ok(())
            }
            _ => Err((true, format!("unknown key '{key}'"))),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.init_kind == InitKind::Scaled && self.init_eps <= 0.0 {
            return Err(crate::error::invalid("init.kind = scaled needs init.eps > 0 as the factor"));
        }
        Ok(())
    }

    /// Every key with its resolved value, in canonical order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (a, n) in self.grid_n.iter().enumerate() {
            out.push((format!("grid.n{}", a + 1), n.to_string()));
        }
        for (a, l) in self.grid_l.iter().enumerate() {
            out.push((format!("grid.l{}", a + 1), l.to_string()));
        }
        out.extend(
            [
                ("fd.order", self.fd_order.to_string()),
                ("flow.kind", kind_name(self.flow_kind).into()),
                ("flow.dt_safety", self.dt_safety.to_string()),
                ("flow.t_max", self.t_max.to_string()),
                ("flow.stop_grad_tol", self.stop_grad_tol.to_string()),
                ("init.kind", self.init_kind.name().into()),
                ("init.eps", self.init_eps.to_string()),
                ("init.seed", self.init_seed.to_string()),
                ("out.path", self.out_path.clone()),
            ]
            .map(|(k, v)| (k.to_string(), v)),
        );
        out
    }

    /// Canonical text; parses back to an equal config.
    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(self.entries().into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect())
    }

    pub fn grid(&self) -> Result<Arc<TorusGrid>> {
        Ok(Arc::new(TorusGrid::new(self.grid_n, self.grid_l, self.fd_order)?))
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            kind: self.flow_kind,
            dt_safety: self.dt_safety,
            t_max: self.t_max,
            stop_grad_tol: self.stop_grad_tol,
            ..FlowConfig::default()
        }
    }

    /// The seeded initial structure.
    pub fn initial_field(&self) -> Result<StructureField> {
        let grid = self.grid()?;
        let bar = normal_form();
        let mut rng = SeededRng::new(self.init_seed);
        match self.init_kind {
            InitKind::Flat => StructureField::flat(&grid, &bar),
            InitKind::Scaled => StructureField::flat(&grid, &bar.scale(self.init_eps)),
            InitKind::FlatPlusRandom => {
                let mut f = crate::field::FormField::constant(&grid, &bar);
                f.axpy(self.init_eps, &TrigSpec::new(&mut rng, 3, &grid).sample(&grid, 3));
                StructureField::new(f)
            }
            InitKind::FlatPlusExact => {
                let mut f = crate::field::FormField::constant(&grid, &bar);
                f.axpy(self.init_eps, &TrigSpec::new(&mut rng, 2, &grid).sample(&grid, 2).d()?);
                StructureField::new(f)
            }
        }
    }
}

fn axis_index(s: &str) -> Option<usize> {
    match s.parse::<usize>() {
        Ok(a @ 1..=N) => Some(a - 1),
        _ => None,
    }
}
