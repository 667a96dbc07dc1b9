//! The normal form on R⁷ and its SU(3) pieces for ξ = e⁷.

use crate::exterior::Form;

/// Ω₀ = e^{127}+e^{347}+e^{567}+e^{135}−e^{146}−e^{236}−e^{245}.
pub fn normal_form() -> Form<f64> {
    Form::from_terms(
        3,
        &[
            (1.0, &[1, 2, 7]),
            (1.0, &[3, 4, 7]),
            (1.0, &[5, 6, 7]),
            (1.0, &[1, 3, 5]),
            (-1.0, &[1, 4, 6]),
            (-1.0, &[2, 3, 6]),
            (-1.0, &[2, 4, 5]),
        ],
    )
}

/// ⋆Ω₀ under the identity metric.
pub fn normal_dual() -> Form<f64> {
    Form::from_terms(
        4,
        &[
            (1.0, &[1, 2, 3, 4]),
            (1.0, &[1, 2, 5, 6]),
            (1.0, &[3, 4, 5, 6]),
            (1.0, &[1, 3, 6, 7]),
            (1.0, &[1, 4, 5, 7]),
            (1.0, &[2, 3, 5, 7]),
            (-1.0, &[2, 4, 6, 7]),
        ],
    )
}

/// ω = e^{12}+e^{34}+e^{56}.
pub fn kahler_form() -> Form<f64> {
    Form::from_terms(2, &[(1.0, &[1, 2]), (1.0, &[3, 4]), (1.0, &[5, 6])])
}

/// ψ₊ = e^{135}−e^{146}−e^{236}−e^{245}.
pub fn psi_plus() -> Form<f64> {
    Form::from_terms(3, &[(1.0, &[1, 3, 5]), (-1.0, &[1, 4, 6]), (-1.0, &[2, 3, 6]), (-1.0, &[2, 4, 5])])
}

/// ψ₋ = e^{136}+e^{145}+e^{235}−e^{246}.
pub fn psi_minus() -> Form<f64> {
    Form::from_terms(3, &[(1.0, &[1, 3, 6]), (1.0, &[1, 4, 5]), (1.0, &[2, 3, 5]), (-1.0, &[2, 4, 6])])
}
