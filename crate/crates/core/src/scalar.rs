//! Scalar abstraction shared by the exact and floating-point code paths.
//!
//! Everything that only needs field operations (matrix products, cylinder
//! twists, period coordinates, projections) is written against [`Scalar`],
//! so the same code runs on `f64`, `f32`, exact rationals and exact
//! elements of ℚ(√2).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An ordered field with an integer floor.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// `true` when arithmetic on this type is exact.
    const EXACT: bool;

    fn from_i64(n: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Greatest integer not exceeding `self`.
    fn floor(&self) -> Self;

    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Representative of `self` modulo `m` in `[0, m)`; `m` must be positive.
    fn rem_euclid(&self, m: &Self) -> Self {
        let q = (self.clone() / m.clone()).floor();
        let r = self.clone() - q * m.clone();
        // Guard against floating point landing exactly on m.
        if r >= *m {
            r - m.clone()
        } else {
            r
        }
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_i64(n: i64) -> Self {
                n as $t
            }

            fn floor(&self) -> Self {
                <$t>::floor(*self)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn floor(&self) -> Self {
        BigRational::floor(self)
    }

    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Converts a big rational to the nearest-ish double without overflowing on
/// huge numerators and denominators.
pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Shift both parts down to 1000 bits before dividing.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 1000).max(0);
    let shift_d = (db - 1000).max(0);
    let n = (r.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift_n - shift_d) as i32)
}

/// Floor division of big integers (rounding toward negative infinity).
pub(crate) fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rem_euclid_lands_in_range() {
        assert_eq!(Scalar::rem_euclid(&-0.25f64, &1.0), 0.75);
        let r = BigRational::from_ratio(-7, 3);
        let m = BigRational::from_i64(2);
        assert_eq!(Scalar::rem_euclid(&r, &m), BigRational::from_ratio(5, 3));
    }

    #[test]
    fn huge_rational_converts() {
        let big = BigInt::from(3) << 3000usize;
        let r = BigRational::new(big.clone(), big * BigInt::from(2));
        assert!((ratio_to_f64(&r) - 0.5).abs() < 1e-15);
    }
}
