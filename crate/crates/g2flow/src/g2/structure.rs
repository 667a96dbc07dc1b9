use super::point::PointStructure;
use crate::error::{invalid, Result};
use crate::exterior::basis::N;
use crate::exterior::{contract_into, hodge, hodge_into, top_coeff, wedge, Form, MetricTensor};
use nalgebra::DMatrix;

/// A positive 3-form with its induced metric, volume, Θ = ⋆Ω and the
/// module projectors on Λ² and Λ³.
///
/// Projectors are self-adjoint for the induced inner product on Λ^p, so in
/// coefficient space they satisfy Pᵀ G = G P with G the Gram matrix.
#[derive(Debug, Clone)]
pub struct G2Structure {
    point: PointStructure<f64>,
    pub proj2_7: DMatrix<f64>,
    pub proj2_14: DMatrix<f64>,
    pub proj3_1: DMatrix<f64>,
    pub proj3_7: DMatrix<f64>,
    pub proj3_27: DMatrix<f64>,
    pub p_matrix: DMatrix<f64>,
}

/// U (Uᵀ G U)⁻¹ Uᵀ G for spanning columns U under the Gram matrix G.
fn gram_projector(u: &DMatrix<f64>, gram: &DMatrix<f64>) -> DMatrix<f64> {
    let gu = gram * u;
    let small = u.transpose() * &gu;
    let inv = small.try_inverse().expect("spanning vectors are independent");
    u * inv * gu.transpose()
}

fn gram_matrix(m: &MetricTensor<f64>, p: usize) -> DMatrix<f64> {
    let n = crate::exterior::dim(p);
    DMatrix::from_row_slice(n, n, m.gram(p))
}

impl G2Structure {
    pub fn new(omega: &Form<f64>) -> Result<Self> {
        if omega.degree() != 3 {
            return Err(invalid("a G2 structure needs a 3-form"));
        }
        let point = PointStructure::new(omega.coeffs())?;
        let m = &point.metric;
        let g2 = gram_matrix(m, 2);
        let g3 = gram_matrix(m, 3);

        // Λ²₇ = { a ⌟ Ω : a ∈ Λ¹ }
        let mut u2 = DMatrix::zeros(21, N);
        for k in 0..N {
            let mut e = [0.0; 7];
            e[k] = 1.0;
            let mut col = [0.0; 21];
            contract_into(&e, 1, &point.omega, 3, m, &mut col);
            u2.column_mut(k).copy_from_slice(&col);
        }
        let proj2_7 = gram_projector(&u2, &g2);
        let proj2_14 = DMatrix::identity(21, 21) - &proj2_7;

        let u1 = DMatrix::from_column_slice(35, 1, &point.omega);
        let proj3_1 = gram_projector(&u1, &g3);
        let mut u3 = DMatrix::zeros(35, N);
        for k in 0..N {
            u3.column_mut(k).copy_from_slice(&point.u7[k]);
        }
        let proj3_7 = gram_projector(&u3, &g3);
        let proj3_27 = DMatrix::identity(35, 35) - &proj3_1 - &proj3_7;
        let p_matrix = &proj3_1 * (4.0 / 3.0) + &proj3_7 - &proj3_27;
        Ok(Self {
            point,
            proj2_7,
            proj2_14,
            proj3_1,
            proj3_7,
            proj3_27,
            p_matrix,
        })
    }

    pub fn standard() -> Self {
        Self::new(&super::standard::normal_form()).expect("normal form is positive")
    }

    pub fn point(&self) -> &PointStructure<f64> {
        &self.point
    }

    pub fn omega(&self) -> Form<f64> {
        Form::from_coeffs(3, self.point.omega.to_vec()).unwrap()
    }

    pub fn theta(&self) -> Form<f64> {
        Form::from_coeffs(4, self.point.theta.to_vec()).unwrap()
    }

    pub fn metric(&self) -> &MetricTensor<f64> {
        &self.point.metric
    }

    pub fn vol(&self) -> f64 {
        self.point.vol
    }

    fn apply(m: &DMatrix<f64>, t: &Form<f64>) -> Form<f64> {
        let v = m * nalgebra::DVector::from_column_slice(t.coeffs());
        Form::from_coeffs(t.degree(), v.as_slice().to_vec()).unwrap()
    }

    /// (t₁, t₇, t₂₇) for a 3-form t.
    pub fn project3(&self, t: &Form<f64>) -> Result<(Form<f64>, Form<f64>, Form<f64>)> {
        if t.degree() != 3 {
            return Err(invalid("project3 needs a 3-form"));
        }
        Ok((
            Self::apply(&self.proj3_1, t),
            Self::apply(&self.proj3_7, t),
            Self::apply(&self.proj3_27, t),
        ))
    }

    /// (t₇, t₁₄) for a 2-form t.
    pub fn project2(&self, t: &Form<f64>) -> Result<(Form<f64>, Form<f64>)> {
        if t.degree() != 2 {
            return Err(invalid("project2 needs a 2-form"));
        }
        Ok((Self::apply(&self.proj2_7, t), Self::apply(&self.proj2_14, t)))
    }

    pub fn p_apply(&self, t: &Form<f64>) -> Result<Form<f64>> {
        if t.degree() != 3 {
            return Err(invalid("p acts on 3-forms"));
        }
        Ok(Self::apply(&self.p_matrix, t))
    }

    /// Θ̇ = ⋆ p(ṫ).
    pub fn theta_derivative(&self, tdot: &Form<f64>) -> Result<Form<f64>> {
        Ok(hodge(&self.p_apply(tdot)?, self.metric()))
    }

    /// Derivative of the volume density: (1/3) Θ ∧ ṫ against e^{1…7}.
    pub fn hitchin_derivative(&self, tdot: &Form<f64>) -> Result<f64> {
        if tdot.degree() != 3 {
            return Err(invalid("hitchin_derivative needs a 3-form"));
        }
        Ok(top_coeff(&wedge(&self.theta(), tdot)?) / 3.0)
    }

    /// ⋆ on p-forms under the induced metric.
    pub fn star(&self, a: &Form<f64>) -> Form<f64> {
        let mut out = Form::zero(N - a.degree());
        hodge_into(a.coeffs(), a.degree(), self.metric(), out.coeffs_mut());
        out
    }
}
