//! Horizontally periodic two-cylinder surfaces with the combinatorics of
//! the octagon's horizontal decomposition, their tremors, and period
//! coordinates.
//!
//! Cylinder `a` is the shorter one. Its boundaries are the long horizontal
//! saddle connection (length `c_a`); cylinder `b` is bounded by that one and
//! the short one (length `c_b − c_a`). Twists are the horizontal
//! displacements of the saddle connections `e₃` (crossing `a`) and `e₂`
//! (crossing `b`), taken modulo the circumferences.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::QSqrt2;
use crate::scalar::Scalar;
use crate::veech::{octagon_sides, PairingData};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoCylinderSurface<T> {
    pub c_a: T,
    pub c_b: T,
    pub h_a: T,
    pub h_b: T,
    pub tw_a: T,
    pub tw_b: T,
}

/// Signed weights of the transverse measure `w_a χ_a dy + w_b χ_b dy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TremorVector<T> {
    pub w_a: T,
    pub w_b: T,
}

/// Holonomy of the four side classes `e₁..e₄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodVector<T> {
    pub x: [T; 4],
    pub y: [T; 4],
}

impl<T: Scalar> TwoCylinderSurface<T> {
    pub fn area_a(&self) -> T {
        self.c_a.clone() * self.h_a.clone()
    }

    pub fn area_b(&self) -> T {
        self.c_b.clone() * self.h_b.clone()
    }

    pub fn area(&self) -> T {
        self.area_a() + self.area_b()
    }

    /// Twists reduced into `[0, c)`.
    pub fn normalized(&self) -> Self {
        TwoCylinderSurface {
            tw_a: self.tw_a.rem_euclid(&self.c_a),
            tw_b: self.tw_b.rem_euclid(&self.c_b),
            ..self.clone()
        }
    }

    /// Adds `d_a`, `d_b` to the twists without reducing them.
    pub fn shear(&self, d_a: T, d_b: T) -> Self {
        TwoCylinderSurface {
            tw_a: self.tw_a.clone() + d_a,
            tw_b: self.tw_b.clone() + d_b,
            ..self.clone()
        }
    }

    /// Period coordinates read off the chart.
    pub fn period_vector(&self) -> PeriodVector<T> {
        let short = self.c_b.clone() - self.c_a.clone();
        let e4x = self.tw_b.clone() + short.clone() - self.c_a.clone();
        PeriodVector {
            x: [short, self.tw_b.clone(), self.tw_a.clone(), e4x],
            y: [T::zero(), self.h_b.clone(), self.h_a.clone(), self.h_b.clone()],
        }
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> TwoCylinderSurface<U> {
        TwoCylinderSurface {
            c_a: f(&self.c_a),
            c_b: f(&self.c_b),
            h_a: f(&self.h_a),
            h_b: f(&self.h_b),
            tw_a: f(&self.tw_a),
            tw_b: f(&self.tw_b),
        }
    }

    pub fn to_f64(&self) -> TwoCylinderSurface<f64> {
        self.map(|x| x.to_f64())
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let d = |x: &T, y: &T| (x.clone() - y.clone()).to_f64().abs();
        d(&self.c_a, &o.c_a)
            .max(d(&self.c_b, &o.c_b))
            .max(d(&self.h_a, &o.h_a))
            .max(d(&self.h_b, &o.h_b))
            .max(d(&self.tw_a, &o.tw_a))
            .max(d(&self.tw_b, &o.tw_b))
    }
}

impl<T: Scalar> TremorVector<T> {
    /// The horizontal foliation's own tremor `dy`, which is the horocycle.
    pub fn dy() -> Self {
        TremorVector {
            w_a: T::one(),
            w_b: T::one(),
        }
    }

    /// The balanced tremor `σ = b·χ_a dy − a·χ_b dy`.
    pub fn sigma(x: &TwoCylinderSurface<T>) -> Self {
        TremorVector {
            w_a: x.area_b(),
            w_b: -x.area_a(),
        }
    }

    /// Twist rates `(w_a h_a, w_b h_b)` on `x`.
    pub fn rates(&self, x: &TwoCylinderSurface<T>) -> (T, T) {
        (
            self.w_a.clone() * x.h_a.clone(),
            self.w_b.clone() * x.h_b.clone(),
        )
    }

    /// The cohomology class as values on `e₁..e₄`.
    pub fn cocycle(&self, x: &TwoCylinderSurface<T>) -> [T; 4] {
        let (ra, rb) = self.rates(x);
        [T::zero(), rb.clone(), ra, rb]
    }

    /// Horizontal displacement of the period vector per unit tremor time.
    pub fn period_displacement(&self, x: &TwoCylinderSurface<T>) -> PeriodVector<T> {
        PeriodVector {
            x: self.cocycle(x),
            y: std::array::from_fn(|_| T::zero()),
        }
    }

    pub fn scale(&self, k: &T) -> Self {
        TremorVector {
            w_a: self.w_a.clone() * k.clone(),
            w_b: self.w_b.clone() * k.clone(),
        }
    }
}

/// Cup-product pairing of two covectors given by their values on `e₁..e₄`.
pub fn pair<T: Scalar>(pairing: &PairingData, th: &[T; 4], et: &[T; 4]) -> T {
    let mut acc = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            let jij = pairing.intersection_matrix[i][j];
            if jij != 0 {
                acc = acc + T::from_i64(jij) * th[i].clone() * et[j].clone();
            }
        }
    }
    acc
}

/// `⟨τ, dx⟩` and `⟨τ, dy⟩` on `x`; both vanish exactly for balanced `τ`.
pub fn balance_defect<T: Scalar>(
    pairing: &PairingData,
    x: &TwoCylinderSurface<T>,
    tau: &TremorVector<T>,
) -> (T, T) {
    let pv = x.period_vector();
    let c = tau.cocycle(x);
    (pair(pairing, &c, &pv.x), pair(pairing, &c, &pv.y))
}

/// Cylinder data of the unit-side octagon, straight from the polygon.
pub fn octagon_cylinders() -> TwoCylinderSurface<QSqrt2> {
    let s = octagon_sides();
    // Vertices in order; vertex k is the start of side k.
    let mut verts = vec![[QSqrt2::zero(), QSqrt2::zero()]];
    for k in 0..7 {
        let v = if k < 4 {
            s[k].clone()
        } else {
            [-s[k - 4][0].clone(), -s[k - 4][1].clone()]
        };
        let last = verts.last().unwrap().clone();
        verts.push([&last[0] + &v[0], &last[1] + &v[1]]);
    }
    let mut ys: Vec<QSqrt2> = verts.iter().map(|v| v[1].clone()).collect();
    ys.sort();
    ys.dedup();
    // Horizontal levels 0 < y₁ < y₂ < y₃ cut the polygon into a trapezoid,
    // a rectangle and a trapezoid; the trapezoids glue into cylinder b.
    let (y1, y2, y3) = (ys[1].clone(), ys[2].clone(), ys[3].clone());
    let width_at = |y: &QSqrt2| {
        // Width of the horizontal chord at height y (polygon is convex).
        let mut xs = Vec::new();
        for k in 0..8 {
            let (p, q) = (&verts[k], &verts[(k + 1) % 8]);
            let (lo, hi) = if p[1] <= q[1] { (p, q) } else { (q, p) };
            if lo[1] <= *y && *y <= hi[1] && lo[1] != hi[1] {
                let t = (y - &lo[1]).checked_div(&(&hi[1] - &lo[1])).unwrap();
                xs.push(&lo[0] + &(&t * &(&hi[0] - &lo[0])));
            }
        }
        let max = xs.iter().max().unwrap().clone();
        let min = xs.iter().min().unwrap().clone();
        &max - &min
    };
    let c_a = width_at(&y1);
    let h_a = &y2 - &y1;
    // A closed horizontal curve in cylinder b crosses both trapezoids; its
    // length is the bottom chord plus the chord at the glued height.
    let c_b = &width_at(&QSqrt2::zero()) + &width_at(&y2);
    let h_b = y1.clone();
    debug_assert_eq!(&y3 - &y2, h_b);
    TwoCylinderSurface {
        c_a,
        c_b: c_b.clone(),
        h_a,
        h_b,
        tw_a: s[2][0].clone(),
        tw_b: s[1][0].rem_euclid(&c_b),
    }
}

/// Applies `diag(α, β)` to the chart.
pub fn linear_diag<T: Scalar>(x: &TwoCylinderSurface<T>, alpha: &T, beta: &T) -> TwoCylinderSurface<T> {
    TwoCylinderSurface {
        c_a: x.c_a.clone() * alpha.clone(),
        c_b: x.c_b.clone() * alpha.clone(),
        h_a: x.h_a.clone() * beta.clone(),
        h_b: x.h_b.clone() * beta.clone(),
        tw_a: x.tw_a.clone() * alpha.clone(),
        tw_b: x.tw_b.clone() * alpha.clone(),
    }
}

/// Least `s > 0` with `s·h_i/c_i ∈ ℤ` for both cylinders, when the moduli
/// are commensurable.
pub fn horocycle_period(x: &TwoCylinderSurface<QSqrt2>) -> Result<QSqrt2> {
    let mu_a = x.h_a.checked_div(&x.c_a)?;
    let mu_b = x.h_b.checked_div(&x.c_b)?;
    let ratio = mu_a.checked_div(&mu_b)?;
    if !ratio.is_rational() {
        return Err(Error::Verification(format!(
            "cylinder moduli are not commensurable: ratio {ratio}"
        )));
    }
    // μ_a/μ_b = p/q in lowest terms; s·μ_b = m needs q | m, so m = q.
    let q = QSqrt2::rational(num_rational::BigRational::from_integer(
        ratio.rational_part().denom().clone(),
    ));
    q.checked_div(&mu_b)
}

/// `ω₁`: the octagon rescaled to unit area and pushed along the geodesic
/// flow so that its horocycle has period exactly one. The two steps combine
/// into `diag(1/λ, 1)`, which keeps everything in ℚ(√2).
pub fn omega1_surface() -> Result<TwoCylinderSurface<QSqrt2>> {
    let oct = octagon_cylinders();
    let lambda = crate::veech::cusp_width();
    let x = linear_diag(&oct, &lambda.inv()?, &QSqrt2::one()).normalized();
    if x.area() != QSqrt2::one() {
        return Err(Error::Verification(format!("ω₁ area is {}", x.area())));
    }
    if horocycle_period(&x)? != QSqrt2::one() {
        return Err(Error::Verification("ω₁ horocycle period is not 1".into()));
    }
    if horocycle_act(&x, &QSqrt2::one()) != x {
        return Err(Error::Verification("u₁ω₁ ≠ ω₁".into()));
    }
    Ok(x)
}

/// `u_s`: twists advance by `s·h_i`, reduced modulo `c_i`.
pub fn horocycle_act<T: Scalar>(x: &TwoCylinderSurface<T>, s: &T) -> TwoCylinderSurface<T> {
    x.shear(s.clone() * x.h_a.clone(), s.clone() * x.h_b.clone())
        .normalized()
}

/// Tremor along `τ` for time `ℓ`, twists reduced.
pub fn tremor_path<T: Scalar>(
    x: &TwoCylinderSurface<T>,
    tau: &TremorVector<T>,
    ell: &T,
) -> TwoCylinderSurface<T> {
    tremor_path_lifted(x, tau, ell).normalized()
}

/// Tremor without reducing the twists, so the marking is kept.
pub fn tremor_path_lifted<T: Scalar>(
    x: &TwoCylinderSurface<T>,
    tau: &TremorVector<T>,
    ell: &T,
) -> TwoCylinderSurface<T> {
    let (ra, rb) = tau.rates(x);
    x.shear(ell.clone() * ra, ell.clone() * rb)
}

/// `g_t` on the chart.
pub fn geodesic_act(x: &TwoCylinderSurface<f64>, t: f64) -> TwoCylinderSurface<f64> {
    linear_diag(x, &t.exp(), &(-t).exp())
}

/// The transported tremor on `g_t x`: the same cohomology class, whose
/// chart weights are `e^t·w` because `dy` shrinks by `e^{−t}`.
pub fn transported_tremor(tau: &TremorVector<f64>, t: f64) -> TremorVector<f64> {
    tau.scale(&t.exp())
}

/// Right-hand side of `g_t Trem_{x,τ}(ℓ) = Trem_{g_t x, τ'}(e^t ℓ)`.
pub fn geodesic_renorm(
    x: &TwoCylinderSurface<f64>,
    tau: &TremorVector<f64>,
    t: f64,
    ell: f64,
) -> TwoCylinderSurface<f64> {
    let gx = geodesic_act(x, t);
    tremor_path_lifted(&gx, &transported_tremor(tau, t), &(t.exp() * ell))
}

impl<T: Scalar> PeriodVector<T> {
    pub fn zero() -> Self {
        PeriodVector {
            x: std::array::from_fn(|_| T::zero()),
            y: std::array::from_fn(|_| T::zero()),
        }
    }

    fn components(&self) -> impl Iterator<Item = &T> {
        self.x.iter().chain(self.y.iter())
    }

    pub fn dot(&self, o: &Self) -> T {
        self.components()
            .zip(o.components())
            .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        PeriodVector {
            x: std::array::from_fn(|i| self.x[i].clone() + o.x[i].clone()),
            y: std::array::from_fn(|i| self.y[i].clone() + o.y[i].clone()),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-T::one()))
    }

    pub fn scale(&self, k: &T) -> Self {
        PeriodVector {
            x: self.x.clone().map(|v| v * k.clone()),
            y: self.y.clone().map(|v| v * k.clone()),
        }
    }

    /// `c ↦ M·h(c)` for `M = [[m11, m12], [m21, m22]]`.
    pub fn linear_image(h: &[[T; 2]; 4], m: [T; 4]) -> Self {
        let [m11, m12, m21, m22] = m;
        PeriodVector {
            x: std::array::from_fn(|i| {
                m11.clone() * h[i][0].clone() + m12.clone() * h[i][1].clone()
            }),
            y: std::array::from_fn(|i| {
                m21.clone() * h[i][0].clone() + m22.clone() * h[i][1].clone()
            }),
        }
    }
}

/// The four elementary images `E_jk·h` spanning `{c ↦ M h(c)}`.
pub fn linear_span_basis<T: Scalar>(h: &[[T; 2]; 4]) -> [PeriodVector<T>; 4] {
    let e = |k: usize| -> [T; 4] { std::array::from_fn(|i| if i == k { T::one() } else { T::zero() }) };
    [0, 1, 2, 3].map(|k| PeriodVector::linear_image(h, e(k)))
}

/// Side holonomies of the octagon in the requested scalar type.
pub fn octagon_holonomy<T: Scalar, F: Fn(&QSqrt2) -> T>(f: F) -> [[T; 2]; 4] {
    octagon_sides().map(|v| [f(&v[0]), f(&v[1])])
}

/// Basis of the tautological subspace `V^st`.
pub fn standard_basis<T: Scalar, F: Fn(&QSqrt2) -> T>(f: F) -> [PeriodVector<T>; 4] {
    linear_span_basis(&octagon_holonomy(f))
}

/// Basis of the balanced subspace `V^bal`, built on the Galois conjugate
/// holonomy.
pub fn balanced_basis<T: Scalar, F: Fn(&QSqrt2) -> T>(f: F) -> [PeriodVector<T>; 4] {
    linear_span_basis(&octagon_holonomy(|x: &QSqrt2| f(&x.galois())))
}

/// Orthogonal projection of `v` onto `span(basis)` by solving the normal
/// equations.
pub fn project<T: Scalar>(v: &PeriodVector<T>, basis: &[PeriodVector<T>; 4]) -> Result<PeriodVector<T>> {
    let mut g: [[T; 5]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| if j < 4 { basis[i].dot(&basis[j]) } else { basis[i].dot(v) })
    });
    // Gaussian elimination with partial pivoting on |·| as f64.
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&a, &b| {
                g[a][col]
                    .to_f64()
                    .abs()
                    .partial_cmp(&g[b][col].to_f64().abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if g[piv][col].is_zero() {
            return Err(Error::DegenerateBasis);
        }
        g.swap(col, piv);
        for row in 0..4 {
            if row != col {
                let k = g[row][col].clone() / g[col][col].clone();
                for j in col..5 {
                    let sub = k.clone() * g[col][j].clone();
                    g[row][j] = g[row][j].clone() - sub;
                }
            }
        }
    }
    let mut out = PeriodVector::zero();
    for i in 0..4 {
        let coef = g[i][4].clone() / g[i][i].clone();
        out = out.add(&basis[i].scale(&coef));
    }
    Ok(out)
}

/// Coefficients `(p₀, p₁, p₂)` of `P(ℓ) = ‖(q + ℓβ) − π^st(q + ℓβ)‖²`.
pub fn distance_polynomial<T: Scalar>(
    q: &PeriodVector<T>,
    beta: &PeriodVector<T>,
    vst_basis: &[PeriodVector<T>; 4],
) -> Result<(T, T, T)> {
    let rq = q.sub(&project(q, vst_basis)?);
    let rb = beta.sub(&project(beta, vst_basis)?);
    let two = T::from_i64(2);
    Ok((rq.dot(&rq), two * rq.dot(&rb), rb.dot(&rb)))
}

/// Evaluates `p₀ + p₁ℓ + p₂ℓ²`.
pub fn eval_quadratic(p: (f64, f64, f64), ell: f64) -> f64 {
    p.0 + ell * (p.1 + ell * p.2)
}

/// Measure of `{ℓ ∈ [lo, hi] : P(ℓ) < δ²}` for a quadratic with `p₂ ≥ 0`.
pub fn sublevel_measure(p: (f64, f64, f64), lo: f64, hi: f64, delta: f64) -> f64 {
    let (c, b, a) = (p.0 - delta * delta, p.1, p.2);
    let clip = |x: f64| x.clamp(lo, hi);
    if a.abs() < 1e-300 {
        if b.abs() < 1e-300 {
            return if c < 0.0 { hi - lo } else { 0.0 };
        }
        let root = -c / b;
        return if b > 0.0 { clip(root) - lo } else { hi - clip(root) };
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let (r1, r2) = ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a));
    clip(r2) - clip(r1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::veech::symplectic_check;

    fn q(a: i64, b: i64) -> QSqrt2 {
        QSqrt2::int(a, b)
    }

    #[test]
    fn octagon_cylinder_data() {
        let o = octagon_cylinders();
        assert_eq!(o.c_a, q(1, 1));
        assert_eq!(o.h_a, q(1, 0));
        assert_eq!(o.c_b, q(2, 1));
        assert_eq!(o.h_b, QSqrt2::half_sqrt2());
        assert_eq!(o.area(), crate::veech::octagon_area());
    }

    #[test]
    fn omega1_data() {
        let w = omega1_surface().unwrap();
        assert_eq!(w.c_a, QSqrt2::from_parts(1, 2, 0, 1));
        assert_eq!(w.h_a, q(1, 0));
        assert_eq!(w.c_b, QSqrt2::half_sqrt2());
        assert_eq!(w.tw_a, q(0, 0));
        assert_eq!(w.tw_b, QSqrt2::from_parts(1, 2, -1, 4));
        assert!(w.c_a < w.c_b);
    }

    #[test]
    fn octagon_period_vector_is_the_sides() {
        let pv = octagon_cylinders().period_vector();
        for (i, side) in octagon_sides().iter().enumerate() {
            assert_eq!(pv.x[i], side[0]);
            assert_eq!(pv.y[i], side[1]);
        }
    }

    #[test]
    fn sigma_is_balanced() {
        let pd = symplectic_check().unwrap();
        let w = omega1_surface().unwrap();
        let s = TremorVector::sigma(&w);
        let (dx, dy) = balance_defect(&pd, &w, &s);
        assert!(dx.is_zero() && dy.is_zero());
        let not_balanced = TremorVector { w_a: q(1, 0), w_b: q(0, 0) };
        assert!(!balance_defect(&pd, &w, &not_balanced).0.is_zero());
    }

    #[test]
    fn dy_tremor_is_horocycle() {
        let w = omega1_surface().unwrap();
        let s = QSqrt2::from_parts(3, 7, 1, 5);
        assert_eq!(tremor_path(&w, &TremorVector::dy(), &s), horocycle_act(&w, &s));
    }

    #[test]
    fn renorm_needs_transported_weights() {
        let x = omega1_surface().unwrap().to_f64();
        let tau = TremorVector::sigma(&x);
        let (t, ell) = (0.8, 0.3);
        let lhs = geodesic_act(&tremor_path_lifted(&x, &tau, &ell), t);
        assert!(lhs.max_abs_diff(&geodesic_renorm(&x, &tau, t, ell)) < 1e-12);
        let same_weights = tremor_path_lifted(&geodesic_act(&x, t), &tau, &(t.exp() * ell));
        assert!(lhs.max_abs_diff(&same_weights) > 1e-3);
    }

    #[test]
    fn standard_and_balanced_are_orthogonal() {
        let st = standard_basis(|x: &QSqrt2| x.clone());
        let bal = balanced_basis(|x: &QSqrt2| x.clone());
        for a in &st {
            for b in &bal {
                assert!(a.dot(b).is_zero());
            }
        }
    }

    #[test]
    fn sublevel_matches_brute_force() {
        let p = (0.2, -0.5, 1.3);
        let (lo, hi, d) = (-1.0, 2.0, 0.6);
        let n = 200_000;
        let cnt = (0..n)
            .filter(|i| {
                let l = lo + (hi - lo) * (*i as f64 + 0.5) / n as f64;
                eval_quadratic(p, l) < d * d
            })
            .count();
        let brute = cnt as f64 / n as f64 * (hi - lo);
        assert!((brute - sublevel_measure(p, lo, hi, d)).abs() < 1e-4);
    }
}
