//! 2×2 matrices over any [`Scalar`].

use std::ops::Mul;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Embedding, QSqrt2, Sign};
use crate::scalar::Scalar;

/// `[[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConjClass {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
    /// Orientation reversing, det = −1.
    Reflection,
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn diag(x: T, y: T) -> Self {
        Mat2::new(x, T::zero(), T::zero(), y)
    }

    pub fn det(&self) -> T {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn trace(&self) -> T {
        self.a.clone() + self.d.clone()
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a.clone(), self.c.clone(), self.b.clone(), self.d.clone())
    }

    /// Adjugate; equals the inverse when det = 1.
    pub fn adjugate(&self) -> Self {
        Mat2::new(
            self.d.clone(),
            -self.b.clone(),
            -self.c.clone(),
            self.a.clone(),
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det.is_zero() {
            return Err(Error::SingularMatrix);
        }
        let adj = self.adjugate();
        Ok(adj.map(|x| x.clone() / det.clone()))
    }

    pub fn scale(&self, k: &T) -> Self {
        self.map(|x| x.clone() * k.clone())
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Mat2<U> {
        Mat2 {
            a: f(&self.a),
            b: f(&self.b),
            c: f(&self.c),
            d: f(&self.d),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn apply(&self, v: [T; 2]) -> [T; 2] {
        let [x, y] = v;
        [
            self.a.clone() * x.clone() + self.b.clone() * y.clone(),
            self.c.clone() * x + self.d.clone() * y,
        ]
    }

    pub fn entries(&self) -> [T; 4] {
        [self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone()]
    }

    pub fn to_f64(&self) -> Mat2<f64> {
        self.map(|x| x.to_f64())
    }
}

impl<'a, T: Scalar> Mul<&'a Mat2<T>> for &'a Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, o: &'a Mat2<T>) -> Mat2<T> {
        let m = |x: &T, y: &T, z: &T, w: &T| x.clone() * y.clone() + z.clone() * w.clone();
        Mat2 {
            a: m(&self.a, &o.a, &self.b, &o.c),
            b: m(&self.a, &o.b, &self.b, &o.d),
            c: m(&self.c, &o.a, &self.d, &o.c),
            d: m(&self.c, &o.b, &self.d, &o.d),
        }
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, o: Mat2<T>) -> Mat2<T> {
        &self * &o
    }
}

impl Mat2<QSqrt2> {
    /// Entrywise Galois conjugation.
    pub fn galois(&self) -> Self {
        self.map(QSqrt2::galois)
    }

    pub fn embed(&self, which: Embedding) -> Mat2<f64> {
        self.map(|x| x.embed(which))
    }

    /// Exact conjugacy class read off from det and tr² − 4 under φ₁.
    pub fn classify(&self) -> ConjClass {
        let det = self.det();
        if det == -QSqrt2::one() {
            return ConjClass::Reflection;
        }
        if *self == Self::identity() || *self == Self::identity().scale(&-QSqrt2::one()) {
            return ConjClass::Identity;
        }
        let tr = self.trace();
        // For det ≠ ±1 the discriminant tr² − 4det still decides the type.
        let disc = &(&tr * &tr) - &(&QSqrt2::from(4) * &det);
        match disc.exact_sign() {
            Sign::Neg => ConjClass::Elliptic,
            Sign::Zero => ConjClass::Parabolic,
            Sign::Pos => ConjClass::Hyperbolic,
        }
    }

    /// Row-major `[a, b, c, d]` in the textual field format.
    pub fn to_strings(&self) -> [String; 4] {
        [
            self.a.to_string(),
            self.b.to_string(),
            self.c.to_string(),
            self.d.to_string(),
        ]
    }

    pub fn from_strings(s: &[String; 4]) -> Result<Self> {
        Ok(Mat2::new(
            s[0].parse()?,
            s[1].parse()?,
            s[2].parse()?,
            s[3].parse()?,
        ))
    }
}

impl Serialize for Mat2<QSqrt2> {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Mat2<QSqrt2> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = <[String; 4]>::deserialize(de)?;
        Mat2::from_strings(&s).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Mat2<f64> {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        [self.a, self.b, self.c, self.d].serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Mat2<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let [a, b, c, d] = <[f64; 4]>::deserialize(de)?;
        Ok(Mat2::new(a, b, c, d))
    }
}

/// Singular value data of a real 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Svd2 {
    pub s_max: f64,
    pub s_min: f64,
    /// Angle in `[0, π)` of the most expanded input direction.
    pub in_max: f64,
    /// Angle in `[0, π)` of the image of the most expanded input.
    pub out_max: f64,
}

pub(crate) fn line_angle(x: f64, y: f64) -> f64 {
    let t = y.atan2(x);
    let t = t.rem_euclid(std::f64::consts::PI);
    if t >= std::f64::consts::PI {
        0.0
    } else {
        t
    }
}

impl Mat2<f64> {
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    /// `g_t = diag(e^t, e^{−t})`.
    pub fn geodesic(t: f64) -> Self {
        Mat2::diag(t.exp(), (-t).exp())
    }

    /// `u_s`, upper unipotent.
    pub fn horocycle(s: f64) -> Self {
        Mat2::new(1.0, s, 0.0, 1.0)
    }

    /// `û_r`, lower unipotent.
    pub fn opposite_horocycle(r: f64) -> Self {
        Mat2::new(1.0, 0.0, r, 1.0)
    }

    pub fn frobenius(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        [
            self.a - o.a,
            self.b - o.b,
            self.c - o.c,
            self.d - o.d,
        ]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn svd(&self) -> Svd2 {
        // Closed form via the Gram matrix MᵀM = [[p, q], [q, r]].
        let p = self.a * self.a + self.c * self.c;
        let q = self.a * self.b + self.c * self.d;
        let r = self.b * self.b + self.d * self.d;
        let det = self.det().abs();
        let half_sum = 0.5 * (p + r);
        let half_diff = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        let l_max = half_sum + half_diff;
        let s_max = l_max.sqrt();
        let s_min = if s_max > 0.0 { det / s_max } else { 0.0 };
        let in_max = line_angle((p - r) + 2.0 * half_diff, 2.0 * q);
        let in_max = if half_diff == 0.0 { 0.0 } else { fix_degenerate(in_max, p, q, r) };
        let (c, s) = (in_max.cos(), in_max.sin());
        let [ox, oy] = self.apply([c, s]);
        Svd2 {
            s_max,
            s_min,
            in_max,
            out_max: line_angle(ox, oy),
        }
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.svd().s_max
    }

    /// Natural log of the spectral norm, robust when entries are large.
    pub fn log_norm(&self) -> f64 {
        let m = [self.a, self.b, self.c, self.d]
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.scale(&(1.0 / m)).norm().ln() + m.ln()
    }

    pub fn vec_norm(v: [f64; 2]) -> f64 {
        v[0].hypot(v[1])
    }
}

fn fix_degenerate(angle: f64, p: f64, q: f64, r: f64) -> f64 {
    // The bisector formula loses its direction when (p − r) + 2·half_diff is
    // tiny, i.e. q ≈ 0 and r > p; the top direction is then the y axis.
    if q.abs() < 1e-300 && r > p {
        std::f64::consts::FRAC_PI_2
    } else {
        angle
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> QSqrt2 {
        QSqrt2::int(a, b)
    }

    #[test]
    fn classify_basic() {
        let id: Mat2<QSqrt2> = Mat2::identity();
        assert_eq!(id.classify(), ConjClass::Identity);
        let par = Mat2::new(q(1, 0), q(1, 1), q(0, 0), q(1, 0));
        assert_eq!(par.classify(), ConjClass::Parabolic);
        let rot = Mat2::new(q(0, 0), q(-1, 0), q(1, 0), q(0, 0));
        assert_eq!(rot.classify(), ConjClass::Elliptic);
        let hyp = Mat2::new(q(2, 0), q(1, 0), q(1, 0), q(1, 0));
        assert_eq!(hyp.classify(), ConjClass::Hyperbolic);
        let refl = Mat2::new(q(0, 0), q(1, 0), q(1, 0), q(0, 0));
        assert_eq!(refl.classify(), ConjClass::Reflection);
    }

    #[test]
    fn inverse_and_singular() {
        let m = Mat2::new(q(2, 1), q(1, 0), q(3, 0), q(1, 1));
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, Mat2::identity());
        let s = Mat2::new(q(1, 1), q(1, 1), q(1, 1), q(1, 1));
        assert!(matches!(s.inverse(), Err(Error::SingularMatrix)));
    }

    #[test]
    fn json_round_trip() {
        let m = Mat2::new(q(2, 1), QSqrt2::from_parts(1, 2, -1, 3), q(3, 0), q(1, 1));
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("[\"2/1 + 1/1*sqrt2\""));
        let back: Mat2<QSqrt2> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn svd_of_diagonal() {
        let s = Mat2::diag(2.0, 0.5).svd();
        assert!((s.s_max - 2.0).abs() < 1e-15);
        assert!((s.s_min - 0.5).abs() < 1e-15);
        assert!(s.in_max.abs() < 1e-15);
        let s = Mat2::diag(0.5, 2.0).svd();
        assert!((s.in_max - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((s.out_max - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn log_norm_survives_overflow() {
        let m = Mat2::diag(1e300, 1e-300);
        assert!((m.log_norm() - 300.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn generic_over_floats_and_rationals() {
        let m32: Mat2<f32> = Mat2::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(m32.det(), -2.0);
        let r = |n: i64| num_rational::BigRational::from_integer(n.into());
        let mr = Mat2::new(r(1), r(2), r(3), r(5));
        assert_eq!(&mr * &mr.inverse().unwrap(), Mat2::identity());
    }
}
