//! Forward-mode dual numbers `val + dot·ε` with `ε² = 0`.
//!
//! Seeding `dot` with a direction and evaluating any [`Scalar`]-generic
//! kernel yields the exact directional derivative in `dot`.

use crate::scalar::Scalar;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dual {
    pub val: f64,
    pub dot: f64,
}

impl Dual {
    #[inline]
    pub const fn new(val: f64, dot: f64) -> Self {
        Self { val, dot }
    }

    #[inline]
    pub const fn constant(val: f64) -> Self {
        Self { val, dot: 0.0 }
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.val + o.val, self.dot + o.dot)
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.val - o.val, self.dot - o.dot)
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(self.val * o.val, self.val * o.dot + self.dot * o.val)
    }
}

impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.val;
        Self::new(self.val * inv, (self.dot - self.val * inv * o.dot) * inv)
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.val, -self.dot)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl MulAssign for Dual {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl DivAssign for Dual {
    #[inline]
    fn div_assign(&mut self, o: Self) {
        *self = *self / o;
    }
}

impl Sum for Dual {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

impl Scalar for Dual {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Self::constant(x)
    }
    #[inline]
    fn value(self) -> f64 {
        self.val
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        Self::new(s, self.dot / (2.0 * s))
    }
    #[inline]
    fn powf(self, e: f64) -> Self {
        let p = self.val.powf(e);
        Self::new(p, e * self.val.powf(e - 1.0) * self.dot)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        Self::new(self.val * c, self.dot * c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_rule() {
        let x = Dual::new(2.0, 1.0);
        let y = x * x / (x + Dual::constant(1.0));
        // d/dx x²/(x+1) = (x²+2x)/(x+1)²
        assert!((y.dot - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn power_and_root() {
        let x = Dual::new(4.0, 1.0);
        assert!((x.sqrt().dot - 0.25).abs() < 1e-15);
        assert!((x.powf(-1.0 / 9.0).dot + (1.0 / 9.0) * 4f64.powf(-10.0 / 9.0)).abs() < 1e-15);
    }
}
