//! Multilinear algebra on Λ*R⁷: wedge, metric contraction, inner products
//! and the Hodge star, for arbitrary positive definite metrics.

pub mod basis;
mod form;
mod metric;
mod ops;

pub use basis::{dim, N};
pub use form::{AlternatingForm, Form};
pub use metric::MetricTensor;
pub use ops::{
    contract, contract_into, hodge, hodge_into, inner, inner_raw, interior, interior_acc, interior_vector, top_coeff,
    pullback, wedge, wedge_acc,
};
