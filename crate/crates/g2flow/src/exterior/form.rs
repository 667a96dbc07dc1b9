use super::basis::{dim, mask_of, Tables, N};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use std::ops::{Add, Mul, Neg, Sub};

/// A degree-p alternating form on R⁷ in the lexicographic basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Form<T = f64> {
    degree: usize,
    coeffs: Vec<T>,
}

pub type AlternatingForm = Form<f64>;

impl<T: Scalar> Form<T> {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= N, "degree {degree} exceeds 7");
        Self {
            degree,
            coeffs: vec![T::zero(); dim(degree)],
        }
    }

    pub fn from_coeffs(degree: usize, coeffs: Vec<T>) -> Result<Self> {
        if degree > N {
            return Err(invalid(format!("degree {degree} exceeds 7")));
        }
        if coeffs.len() != dim(degree) {
            return Err(invalid(format!(
                "degree {degree} needs {} coefficients, got {}",
                dim(degree),
                coeffs.len()
            )));
        }
        Ok(Self { degree, coeffs })
    }

    /// Builds Σ c·e^{i₁…i_p} from 1-based index lists in any order.
    ///
    /// Panics on malformed index lists; intended for literals.
    pub fn from_terms(degree: usize, terms: &[(f64, &[usize])]) -> Self {
        let t = Tables::get();
        let mut f = Self::zero(degree);
        for (c, idx) in terms {
            assert_eq!(idx.len(), degree, "term {idx:?} has wrong degree");
            let (mask, sign) = mask_of(idx).expect("malformed multi-index");
            f.coeffs[t.rank(mask)] += T::from_f64(c * sign);
        }
        f
    }

    pub fn basis(indices: &[usize]) -> Self {
        Self::from_terms(indices.len(), &[(1.0, indices)])
    }

    pub fn scalar(c: T) -> Self {
        Self {
            degree: 0,
            coeffs: vec![c],
        }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient of e^{indices} (1-based, any order).
    pub fn coeff(&self, indices: &[usize]) -> T {
        let (mask, sign) = mask_of(indices).expect("malformed multi-index");
        assert_eq!(indices.len(), self.degree);
        self.coeffs[Tables::get().rank(mask)].scale(sign)
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&x| x * c).collect(),
        }
    }

    /// Euclidean coefficient norm (not metric).
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|x| x.value() * x.value()).sum::<f64>().sqrt()
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.degree != other.degree {
            return Err(invalid("forms of different degree cannot be added"));
        }
        Ok(Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a + *b).collect(),
        })
    }

    pub fn values(&self) -> Form<f64> {
        Form {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|x| x.value()).collect(),
        }
    }
}

impl Form<f64> {
    pub fn lift<T: Scalar>(&self) -> Form<T> {
        Form {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&x| T::from_f64(x)).collect(),
        }
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.degree, other.degree);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl<T: Scalar> Add for &Form<T> {
    type Output = Form<T>;
    fn add(self, o: &Form<T>) -> Form<T> {
        self.try_add(o).expect("degree mismatch in form addition")
    }
}

impl<T: Scalar> Sub for &Form<T> {
    type Output = Form<T>;
    fn sub(self, o: &Form<T>) -> Form<T> {
        assert_eq!(self.degree, o.degree, "degree mismatch in form subtraction");
        Form {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<T: Scalar> Neg for &Form<T> {
    type Output = Form<T>;
    fn neg(self) -> Form<T> {
        Form {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&a| -a).collect(),
        }
    }
}

impl Mul<&Form<f64>> for f64 {
    type Output = Form<f64>;
    fn mul(self, f: &Form<f64>) -> Form<f64> {
        f.scale(self)
    }
}
