//! Scalar abstraction shared by `f64` and forward-mode dual numbers.
//!
//! Every pointwise kernel is written against [`Scalar`] so the same code
//! path yields values (`f64`) or exact directional derivatives ([`Dual`]).
//!
//! [`Dual`]: crate::dual::Dual

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + Default
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
{
    fn from_f64(x: f64) -> Self;
    /// Primal value; the part that drives branching and pivoting.
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn powf(self, e: f64) -> Self;

    #[inline]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    #[inline]
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
}
