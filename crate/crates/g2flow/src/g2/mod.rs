//! Nonlinear pointwise G2 algebra: positivity, the induced metric, Θ,
//! module projectors, the operator p and the SU(3) refinement.

mod point;
pub mod standard;
mod structure;
mod su3;

pub use point::{bilinear_form, check_positive, is_positive, metric_from_form, signature, PointStructure};
pub(crate) use point::cubic_terms;
pub use structure::G2Structure;
pub use su3::{su3_decompose, su3_frame, su3_reassemble, Su3Components, Su3Frame};

#[cfg(test)]
mod tests;
