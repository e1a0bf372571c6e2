//! Exact arithmetic in the real quadratic field ℚ(√2).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{floor_div, ratio_to_f64, Scalar};

/// The element `a + b√2` with rational coordinates.
///
/// `BigRational` keeps both coordinates in lowest terms with a positive
/// denominator, so structural equality is field equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    a: BigRational,
    b: BigRational,
}

/// The two real embeddings of ℚ(√2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    /// √2 ↦ +1.41421356…
    Phi1,
    /// √2 ↦ −1.41421356…, i.e. `Phi1` after Galois conjugation.
    Phi2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    fn from_ordering(o: Ordering) -> Self {
        match o {
            Ordering::Less => Sign::Neg,
            Ordering::Equal => Sign::Zero,
            Ordering::Greater => Sign::Pos,
        }
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl QSqrt2 {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        QSqrt2 { a, b }
    }

    /// `an/ad + (bn/bd)·√2`.
    pub fn from_parts(an: i64, ad: i64, bn: i64, bd: i64) -> Self {
        QSqrt2 {
            a: rat(an, ad),
            b: rat(bn, bd),
        }
    }

    /// The integer element `a + b√2`.
    pub fn int(a: i64, b: i64) -> Self {
        Self::from_parts(a, 1, b, 1)
    }

    pub fn rational(r: BigRational) -> Self {
        QSqrt2 {
            a: r,
            b: BigRational::zero(),
        }
    }

    pub fn sqrt2() -> Self {
        Self::int(0, 1)
    }

    /// `√2/2`, the cosine of π/4.
    pub fn half_sqrt2() -> Self {
        Self::from_parts(0, 1, 1, 2)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Galois conjugation √2 ↦ −√2.
    pub fn galois(&self) -> Self {
        QSqrt2 {
            a: self.a.clone(),
            b: -self.b.clone(),
        }
    }

    /// Field norm `a² − 2b²` (product with the conjugate).
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - rat(2, 1) * &self.b * &self.b
    }

    pub fn embed(&self, which: Embedding) -> f64 {
        let a = ratio_to_f64(&self.a);
        let b = match which {
            Embedding::Phi1 => ratio_to_f64(&self.b),
            Embedding::Phi2 => -ratio_to_f64(&self.b),
        };
        let direct = a + b * std::f64::consts::SQRT_2;
        if a * b >= 0.0 {
            return direct;
        }
        // Opposite signs cancel. Use a + b√2 = N/(a − b√2) with the exact
        // norm N, written as a·(N/a²)/(1 − (b/a)√2) to stay in range.
        let t = ratio_to_f64(&(self.norm() / (&self.a * &self.a)));
        a * t / (1.0 - b / a * std::f64::consts::SQRT_2)
    }

    /// Exact sign of the image under φ₁.
    pub fn exact_sign(&self) -> Sign {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        match (sa, sb) {
            (Sign::Zero, s) | (s, Sign::Zero) => s,
            (Sign::Pos, Sign::Pos) => Sign::Pos,
            (Sign::Neg, Sign::Neg) => Sign::Neg,
            // a > 0 > b: positive iff a² > 2b².
            (Sign::Pos, Sign::Neg) => {
                Sign::from_ordering((&self.a * &self.a).cmp(&(rat(2, 1) * &self.b * &self.b)))
            }
            // a < 0 < b: positive iff 2b² > a².
            (Sign::Neg, Sign::Pos) => {
                Sign::from_ordering((rat(2, 1) * &self.b * &self.b).cmp(&(&self.a * &self.a)))
            }
        }
    }

    pub fn inv(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(QSqrt2 {
            a: &self.a / &n,
            b: -(&self.b / &n),
        })
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.inv()?)
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = QSqrt2::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Common-denominator form `(num_a + num_b·√2) / den` with `den > 0`.
    fn over_common_denominator(&self) -> (BigInt, BigInt, BigInt) {
        let da = self.a.denom();
        let db = self.b.denom();
        let den = num_integer::lcm(da.clone(), db.clone());
        let na = self.a.numer() * (&den / da);
        let nb = self.b.numer() * (&den / db);
        (na, nb, den)
    }
}

fn sign_of(r: &BigRational) -> Sign {
    if r.is_zero() {
        Sign::Zero
    } else if r.is_positive() {
        Sign::Pos
    } else {
        Sign::Neg
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt2 {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self - other).exact_sign() {
            Sign::Neg => Ordering::Less,
            Sign::Zero => Ordering::Equal,
            Sign::Pos => Ordering::Greater,
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<'a> $tr<&'a QSqrt2> for &'a QSqrt2 {
            type Output = QSqrt2;
            fn $method(self, rhs: &'a QSqrt2) -> QSqrt2 {
                let f: fn(&QSqrt2, &QSqrt2) -> QSqrt2 = $body;
                f(self, rhs)
            }
        }
        impl $tr<QSqrt2> for QSqrt2 {
            type Output = QSqrt2;
            fn $method(self, rhs: QSqrt2) -> QSqrt2 {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |x, y| QSqrt2 {
    a: &x.a + &y.a,
    b: &x.b + &y.b,
});
forward_binop!(Sub, sub, |x, y| QSqrt2 {
    a: &x.a - &y.a,
    b: &x.b - &y.b,
});
forward_binop!(Mul, mul, |x, y| QSqrt2 {
    a: &x.a * &y.a + rat(2, 1) * &x.b * &y.b,
    b: &x.a * &y.b + &x.b * &y.a,
});
forward_binop!(Div, div, |x, y| x
    .checked_div(y)
    .expect("division by zero in Q(sqrt2)"));

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl<'a> Neg for &'a QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        -self.clone()
    }
}

impl Zero for QSqrt2 {
    fn zero() -> Self {
        QSqrt2 {
            a: BigRational::zero(),
            b: BigRational::zero(),
        }
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl One for QSqrt2 {
    fn one() -> Self {
        Self::int(1, 0)
    }
}

impl From<i64> for QSqrt2 {
    fn from(n: i64) -> Self {
        Self::int(n, 0)
    }
}

impl Scalar for QSqrt2 {
    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        Self::int(n, 0)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_parts(num, den, 0, 1)
    }

    /// Exact floor under φ₁.
    fn floor(&self) -> Self {
        let (na, nb, den) = self.over_common_denominator();
        // value = (na + nb·√2)/den, and nb·√2 lies in [s, s + 1) for s below.
        let root = (BigInt::from(2) * &nb * &nb).sqrt();
        let s = if nb.is_negative() { -&root - 1 } else { root };
        let mut k = floor_div(&(&na + &s), &den);
        let val = self.clone();
        let as_q = |k: &BigInt| QSqrt2::rational(BigRational::from_integer(k.clone()));
        while (&val - &as_q(&k)).exact_sign() == Sign::Neg {
            k -= 1;
        }
        while (&val - &as_q(&(&k + 1))).exact_sign() != Sign::Neg {
            k += 1;
        }
        as_q(&k)
    }

    fn to_f64(&self) -> f64 {
        self.embed(Embedding::Phi1)
    }
}

fn fmt_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

impl fmt::Display for QSqrt2 {
    /// Always `p/q + r/s*sqrt2`, denominators included.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*sqrt2", fmt_rational(&self.a), fmt_rational(&self.b))
    }
}

impl fmt::Debug for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QSqrt2({self})")
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

impl FromStr for QSqrt2 {
    type Err = Error;

    /// Accepts `p/q + r/s*sqrt2`, a bare rational, or `r/s*sqrt2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_suffix("*sqrt2") {
            // Split at the last top-level " + " so a negative sqrt2 part such
            // as "1/1 + -3/2*sqrt2" parses.
            return match body.rfind(" + ") {
                Some(i) => Ok(QSqrt2 {
                    a: parse_rational(&body[..i])?,
                    b: parse_rational(&body[i + 3..])?,
                }),
                None => Ok(QSqrt2 {
                    a: BigRational::zero(),
                    b: parse_rational(body)?,
                }),
            };
        }
        Ok(QSqrt2::rational(parse_rational(s)?))
    }
}

impl Serialize for QSqrt2 {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for QSqrt2 {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
