//! Numerical kernel for G2-structures on the flat 7-torus: exact exterior
//! and G2 algebra over R⁷, discrete exterior calculus on periodic grids,
//! the Dirichlet energy, its gradient flow and DeTurck modification,
//! principal-symbol analysis and spectra of the linearised operator.

pub mod calculus;
pub mod config;
pub mod deturck;
pub mod dpq;
pub mod dual;
pub mod energy;
pub mod error;
pub mod exterior;
pub mod field;
pub mod flow;
pub mod g2;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod rng;
pub mod scalar;
pub mod suite;
pub mod symbol;

pub use dual::Dual;
pub use error::{Error, Result, Signature};
pub use exterior::{AlternatingForm, Form, MetricTensor};
pub use g2::G2Structure;
pub use scalar::Scalar;
pub use calculus::StructureField;
pub use config::RunConfig;
pub use field::FormField;
pub use flow::{FlowConfig, FlowStatus, FlowTrace};
pub use grid::TorusGrid;
pub use suite::SuiteReport;
