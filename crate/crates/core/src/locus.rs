//! The unit-area octagon locus as `SL(2,ℝ)/Γ`.
//!
//! A point is a frame `F` up to right multiplication by the Veech group. It
//! is tracked through `z = F⁻¹·i` in the upper half plane together with the
//! fiber angle. The fundamental domain is the triangle-group domain
//!
//! ```text
//! D = { |Re z| ≤ 1+√2,  |z − 1| ≥ √2,  |z + 1| ≥ √2 }
//! ```
//!
//! with cusps at `∞` and `±(1+√2)` and an elliptic point of order 4 at `i`.
//! Side pairings are `T = [[1, λ], [0, 1]]` on the vertical sides and the
//! rotation `ρ` on the two arcs. Reduction is canonical: the frame sign is
//! fixed by requiring the fiber angle to lie in `[0, π)`.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::veech::{Gen, GroupWord};
use crate::RealMat;

/// `λ = 2 + 2√2` as a double.
pub const LAMBDA: f64 = 2.0 + 2.0 * SQRT_2;
/// Real coordinate of the finite cusp, `1 + √2 = λ/2`.
pub const CUSP_X: f64 = 1.0 + SQRT_2;
/// Hyperbolic area of the fundamental domain.
pub const DOMAIN_AREA: f64 = 1.5 * PI;

const TIE_TOL: f64 = 1e-12;
const MAX_REDUCTION_STEPS: usize = 10_000;
const MAX_STEP: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

/// `z = F⁻¹·i`.
pub fn base_point(f: &RealMat) -> Complex {
    // F⁻¹ = [[d, −b], [−c, a]] acting on i.
    let den = f.a * f.a + f.c * f.c;
    Complex {
        re: -(f.d * f.c + f.b * f.a) / den,
        im: 1.0 / den,
    }
}

/// `S(z)` with `S(z)⁻¹·i = z`, so every frame is `K_θ·S(z)`.
pub fn standard_frame(z: Complex) -> RealMat {
    let r = z.im.sqrt();
    RealMat::new(1.0 / r, -z.re / r, 0.0, r)
}

/// Frame with base point `z` and fiber angle `theta`.
pub fn frame_from(z: Complex, theta: f64) -> RealMat {
    &RealMat::rotation(theta) * &standard_frame(z)
}

/// Fiber angle in `(−π, π]`.
pub fn fiber_angle(f: &RealMat, z: Complex) -> f64 {
    let r = z.im.sqrt();
    let s_inv = RealMat::new(r, z.re / r, 0.0, 1.0 / r);
    let k = f * &s_inv;
    k.c.atan2(k.a)
}

fn numeric_rho(exp: i32) -> RealMat {
    RealMat::rotation(PI / 4.0 * exp as f64)
}

fn numeric_translation(k: i64) -> RealMat {
    RealMat::horocycle(k as f64 * LAMBDA)
}

/// Whether `z` lies in the closed fundamental domain, up to `tol`.
pub fn in_domain(z: Complex, tol: f64) -> bool {
    let r2 = |c: f64| (z.re - c) * (z.re - c) + z.im * z.im;
    z.im > 0.0 && z.re.abs() <= CUSP_X + tol && r2(1.0) >= 2.0 - tol && r2(-1.0) >= 2.0 - tol
}

/// Output of a reduction.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub frame: RealMat,
    /// `input · eval(word) = frame`.
    pub word: GroupWord,
    pub tie: bool,
    pub certified: bool,
    pub steps: usize,
}

/// Reduces a det-one frame into the fundamental domain.
pub fn reduce_frame(g: &RealMat) -> Result<Reduction> {
    let mut f = g.clone();
    let mut word = GroupWord::new();
    let mut tie = false;
    let mut steps = 0;
    loop {
        steps += 1;
        if steps > MAX_REDUCTION_STEPS {
            return Err(Error::ReductionOverflow(MAX_REDUCTION_STEPS));
        }
        let z = base_point(&f);
        if z.re.abs() > CUSP_X + TIE_TOL {
            // Moving z by T^{-k} means F ← F·T^k.
            let k = (z.re / LAMBDA).round() as i64;
            f = &f * &numeric_translation(k);
            word.append(&GroupWord::translation(k));
            continue;
        }
        tie |= (z.re.abs() - CUSP_X).abs() <= TIE_TOL;
        let dr = (z.re - 1.0) * (z.re - 1.0) + z.im * z.im - 2.0;
        let dl = (z.re + 1.0) * (z.re + 1.0) + z.im * z.im - 2.0;
        tie |= dr.abs() <= TIE_TOL || dl.abs() <= TIE_TOL;
        if dr < -TIE_TOL {
            // z ↦ ρ⁻¹z lifts points inside |z − 1| < √2.
            f = &f * &numeric_rho(1);
            word.push(Gen::Rho, 1);
        } else if dl < -TIE_TOL {
            f = &f * &numeric_rho(-1);
            word.push(Gen::Rho, -1);
        } else {
            break;
        }
    }
    let z = base_point(&f);
    let theta = fiber_angle(&f, z);
    if !(0.0..PI).contains(&theta) {
        f = f.scale(&-1.0);
        word.push(Gen::Rho, 4);
    }
    // Rebuild from (z, θ) to remove drift in the determinant.
    let z = base_point(&f);
    let f = frame_from(z, fiber_angle(&f, z));
    Ok(Reduction {
        certified: in_domain(z, 1e-9),
        frame: f,
        word,
        tie,
        steps,
    })
}

/// A point of `SL(2,ℝ)/Γ` with its accumulated return word.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocusPoint {
    pub frame: RealMat,
    pub word: GroupWord,
    pub domain_certificate: bool,
    pub tie: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum Flow {
    Geodesic(f64),
    Horocycle(f64),
    OppositeHorocycle(f64),
    Rotation(f64),
}

impl Flow {
    pub fn matrix(self) -> RealMat {
        match self {
            Flow::Geodesic(t) => RealMat::geodesic(t),
            Flow::Horocycle(s) => RealMat::horocycle(s),
            Flow::OppositeHorocycle(r) => RealMat::opposite_horocycle(r),
            Flow::Rotation(th) => RealMat::rotation(th),
        }
    }

    pub fn param(self) -> f64 {
        match self {
            Flow::Geodesic(x) | Flow::Horocycle(x) | Flow::OppositeHorocycle(x) | Flow::Rotation(x) => x,
        }
    }

    fn with_param(self, x: f64) -> Flow {
        match self {
            Flow::Geodesic(_) => Flow::Geodesic(x),
            Flow::Horocycle(_) => Flow::Horocycle(x),
            Flow::OppositeHorocycle(_) => Flow::OppositeHorocycle(x),
            Flow::Rotation(_) => Flow::Rotation(x),
        }
    }
}

/// Moves a reduced frame along `kind` in small substeps, re-reducing after
/// each one and handing every step word to `on_word` in order.
pub fn flow_frame<F: FnMut(&GroupWord)>(
    frame: &RealMat,
    kind: Flow,
    mut on_word: F,
) -> Result<(RealMat, bool)> {
    let total = kind.param();
    let mut f = frame.clone();
    let mut tie = false;
    let mut done = 0.0;
    if matches!(kind, Flow::Rotation(_)) {
        // Rotation fixes z, so one reduction covers the whole move.
        let r = reduce_frame(&(&kind.matrix() * &f))?;
        on_word(&r.word);
        return Ok((r.frame, r.tie));
    }
    while done < total.abs() {
        let h = height(base_point(&f)).max(1.0);
        let step = (MAX_STEP / h).max(1e-3).min(total.abs() - done);
        done += step;
        let g = kind.with_param(step * total.signum()).matrix();
        let r = reduce_frame(&(&g * &f))?;
        on_word(&r.word);
        tie |= r.tie;
        f = r.frame;
    }
    Ok((f, tie))
}

impl LocusPoint {
    pub fn z(&self) -> Complex {
        base_point(&self.frame)
    }

    pub fn theta(&self) -> f64 {
        fiber_angle(&self.frame, self.z())
    }

    pub fn height(&self) -> f64 {
        height(self.z())
    }

    /// Applies `kind` and extends the word by the step words.
    pub fn flow(&self, kind: Flow) -> Result<LocusPoint> {
        let mut word = self.word.clone();
        let (frame, tie) = flow_frame(&self.frame, kind, |w| word.append(w))?;
        let z = base_point(&frame);
        Ok(LocusPoint {
            frame,
            word,
            domain_certificate: in_domain(z, 1e-9),
            tie: self.tie || tie,
        })
    }

    /// Same point with an empty accumulated word.
    pub fn rebased(&self) -> LocusPoint {
        LocusPoint {
            word: GroupWord::new(),
            ..self.clone()
        }
    }
}

pub fn reduce(frame: &RealMat) -> Result<LocusPoint> {
    let det = frame.det();
    if (det - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("frame determinant {det} is not 1")));
    }
    let r = reduce_frame(frame)?;
    Ok(LocusPoint {
        frame: r.frame,
        word: r.word,
        domain_certificate: r.certified,
        tie: r.tie,
    })
}

/// The surface `ω₁ = diag(λ^{-1/2}, λ^{1/2})·ω₀` on the period-one horocycle.
pub fn omega1_point() -> LocusPoint {
    let s = LAMBDA.sqrt();
    reduce(&RealMat::diag(1.0 / s, s)).expect("ω₁ frame is reduced")
}

/// Cusp-normalizing map for `1+√2`, scaled so its stabilizer becomes
/// translation by `λ`. Returns `(a, b, c, d)` of the Möbius map.
fn finite_cusp_chart() -> [f64; 4] {
    // C(z) = −1/(z − p) sends p to ∞. The stabilizer of p is T·ρ⁻¹ as a
    // Möbius map; measure its translation length after conjugating by C.
    let p = CUSP_X;
    let z0 = Complex { re: 0.3, im: 0.7 };
    let c_of = |z: Complex| -> Complex {
        let (x, y) = (z.re - p, z.im);
        let n = x * x + y * y;
        Complex { re: -x / n, im: y / n }
    };
    let rho_inv = |z: Complex| -> Complex {
        // (z + 1)/(−z + 1)
        let (nx, ny) = (z.re + 1.0, z.im);
        let (dx, dy) = (1.0 - z.re, -z.im);
        let n = dx * dx + dy * dy;
        Complex {
            re: (nx * dx + ny * dy) / n,
            im: (ny * dx - nx * dy) / n,
        }
    };
    let mut pz = rho_inv(z0);
    pz.re += LAMBDA;
    let w = (c_of(pz).re - c_of(z0).re).abs();
    let k = LAMBDA / w;
    // z ↦ k·(−1/(z − p)) = (0·z − k)/(z − p)
    [0.0, -k, 1.0, -p]
}

fn mobius_im(m: [f64; 4], z: Complex) -> f64 {
    let [_, _, c, d] = m;
    let (x, y) = (c * z.re + d, c * z.im);
    // Im((az+b)/(cz+d)) = det·Im z / |cz+d|², det = −b·c here scaled to k.
    let det = m[0] * m[3] - m[1] * m[2];
    det * z.im / (x * x + y * y)
}

/// Cusp height of a reduced base point: the larger of `Im z` and the
/// normalized height at the finite cusp (approached from either side).
pub fn height(z: Complex) -> f64 {
    use std::sync::OnceLock;
    static CHART: OnceLock<[f64; 4]> = OnceLock::new();
    let chart = *CHART.get_or_init(finite_cusp_chart);
    let right = mobius_im(chart, z);
    let left = mobius_im(chart, Complex { re: z.re + LAMBDA, im: z.im });
    z.im.max(right).max(left)
}

/// Flow-adapted coordinates: `y = û_{u_hat} · diag(e^{a/2}, e^{−a/2}) · u_u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowBoxCoords {
    pub u_hat: f64,
    pub a: f64,
    pub u: f64,
}

impl FlowBoxCoords {
    pub fn compose(&self) -> RealMat {
        let e = (self.a / 2.0).exp();
        let d = RealMat::diag(e, 1.0 / e);
        &(&RealMat::opposite_horocycle(self.u_hat) * &d) * &RealMat::horocycle(self.u)
    }

    pub fn max_abs(&self) -> f64 {
        self.u_hat.abs().max(self.a.abs()).max(self.u.abs())
    }
}

pub fn flowbox_split(y: &RealMat) -> Result<FlowBoxCoords> {
    if y.a <= 0.0 {
        return Err(Error::OutOfBox(y.a));
    }
    Ok(FlowBoxCoords {
        u_hat: y.c / y.a,
        a: 2.0 * y.a.ln(),
        u: y.b / y.a,
    })
}

/// Derivative in `s` of the weak-stable holonomy `s ↦ e^{−2t}s/(1+sr)`.
pub fn weak_stable_holonomy_jacobian(t: f64, r: f64, s: f64) -> Result<f64> {
    let k = 1.0 + s * r;
    if k <= 0.0 {
        return Err(Error::OutOfBox(k));
    }
    Ok((-2.0 * t).exp() / (k * k))
}

/// Reference sample of the normalized Haar measure.
#[derive(Clone, Debug)]
pub struct HaarSample {
    pub points: Vec<LocusPoint>,
    pub draws: u64,
    /// Hyperbolic mass of the sampling box.
    pub box_mass: f64,
    /// Mass of the domain above `y_max` plus below `y_min`.
    pub truncated_mass: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl HaarSample {
    /// Area estimate from the acceptance rate plus the truncated tails.
    pub fn area_estimate(&self) -> f64 {
        self.points.len() as f64 / self.draws as f64 * self.box_mass + self.truncated_mass
    }
}

pub const HAAR_Y_MIN: f64 = 0.01;
pub const HAAR_Y_MAX: f64 = 1000.0;

/// Mass `∫_0^{y0} W(y)/y² dy` of the two thin cusp spikes below `y0`, where
/// `W(y) = 2(√2 − √(2 − y²))` is their combined width.
fn spike_mass_below(y0: f64) -> f64 {
    let n = 2000;
    let h = y0 / n as f64;
    // W(y)/y² = 2/(√2 + √(2 − y²)), smooth on [0, y0].
    let g = |y: f64| 2.0 / (SQRT_2 + (2.0 - y * y).sqrt());
    let mut s = g(0.0) + g(y0);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Rejection sampling of `dx dy / y² × dθ` over the box
/// `[−λ/2, λ/2] × [y_min, y_max] × [0, π)`.
pub fn haar_sample(n: usize, seed: u64) -> HaarSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (y0, y1) = (HAAR_Y_MIN, HAAR_Y_MAX);
    let (inv0, inv1) = (1.0 / y0, 1.0 / y1);
    let mut points = Vec::with_capacity(n);
    let mut draws = 0u64;
    while points.len() < n {
        draws += 1;
        let x = rng.gen_range(-CUSP_X..CUSP_X);
        let u: f64 = rng.gen();
        let y = 1.0 / (inv0 - u * (inv0 - inv1));
        let theta = rng.gen_range(0.0..PI);
        let z = Complex { re: x, im: y };
        if in_domain(z, 0.0) {
            points.push(LocusPoint {
                frame: frame_from(z, theta),
                word: GroupWord::new(),
                domain_certificate: true,
                tie: false,
            });
        }
    }
    HaarSample {
        points,
        draws,
        box_mass: LAMBDA * (inv0 - inv1),
        truncated_mass: LAMBDA * inv1 + spike_mass_below(y0),
        y_min: y0,
        y_max: y1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::veech::eval_word;
    use crate::Embedding;

    fn random_frame(rng: &mut ChaCha8Rng) -> RealMat {
        let z = Complex {
            re: rng.gen_range(-2.0..2.0),
            im: rng.gen_range(1.5..4.0),
        };
        frame_from(z, rng.gen_range(0.0..PI))
    }

    #[test]
    fn identity_is_reduced() {
        let p = reduce(&RealMat::identity()).unwrap();
        assert!(p.word.is_empty());
        assert!(p.frame.max_abs_diff(&RealMat::identity()) < 1e-15);
        assert!(p.domain_certificate);
    }

    #[test]
    fn gamma_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let g = random_frame(&mut rng);
            let g = reduce(&g).unwrap().frame;
            let letters: Vec<(Gen, i32)> = (0..rng.gen_range(1..6))
                .map(|_| match rng.gen_range(0..3) {
                    0 => (Gen::Rho, rng.gen_range(1..8)),
                    1 => (Gen::Nu4, rng.gen_range(1..4)),
                    _ => (Gen::Gamma, 1),
                })
                .flat_map(|l| {
                    // Keep words orientation preserving by pairing γ with ν₃.
                    if l.0 == Gen::Gamma {
                        vec![l, (Gen::Nu3, 1)]
                    } else {
                        vec![l]
                    }
                })
                .collect();
            let w = GroupWord::from_letters(letters);
            let m = eval_word(&w).embed(Embedding::Phi1);
            let r = reduce(&(&g * &m)).unwrap();
            assert!(r.frame.max_abs_diff(&g) < 1e-9, "{w}");
            assert_eq!(eval_word(&r.word), eval_word(&w.inverse()));
        }
    }

    #[test]
    fn geodesic_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let x = reduce(&random_frame(&mut rng)).unwrap().rebased();
            let t = rng.gen_range(0.5..4.0);
            let y = x.flow(Flow::Geodesic(t)).unwrap();
            let back = y.flow(Flow::Geodesic(-t)).unwrap();
            assert!(back.frame.max_abs_diff(&x.frame) < 1e-9);
            assert_eq!(eval_word(&back.word), crate::ExactMat::identity());
        }
    }

    #[test]
    fn omega1_horocycle_period() {
        let w1 = omega1_point();
        assert!(w1.word.is_empty());
        let back = w1.flow(Flow::Horocycle(1.0)).unwrap();
        assert!(back.frame.max_abs_diff(&w1.frame) < 1e-9);
        assert_eq!(back.word, GroupWord::translation(-1));
    }

    #[test]
    fn commutation() {
        let (t, s) = (0.7, 0.3);
        let lhs = &RealMat::geodesic(t) * &RealMat::horocycle(s);
        let rhs = &RealMat::horocycle((2.0 * t).exp() * s) * &RealMat::geodesic(t);
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn flowbox() {
        let (s, r) = (0.3, 0.2);
        let y = &RealMat::horocycle(s) * &RealMat::opposite_horocycle(r);
        let c = flowbox_split(&y).unwrap();
        let k: f64 = 1.0 + s * r;
        assert!((c.u_hat - r / k).abs() < 1e-12);
        assert!((c.a - 2.0 * k.ln()).abs() < 1e-12);
        assert!((c.u - s / k).abs() < 1e-12);
        assert!(c.compose().max_abs_diff(&y) < 1e-12);
        let id = flowbox_split(&RealMat::identity()).unwrap();
        assert_eq!(id.max_abs(), 0.0);
        assert!(flowbox_split(&RealMat::diag(-1.0, -1.0)).is_err());
    }

    #[test]
    fn jacobian() {
        assert_eq!(weak_stable_holonomy_jacobian(0.0, 0.0, 0.7).unwrap(), 1.0);
        let (t, r, s) = (0.4f64, 0.3, 0.5);
        let f = |s: f64| (-2.0 * t).exp() * s / (1.0 + s * r);
        let h = 1e-6;
        let fd = (f(s + h) - f(s - h)) / (2.0 * h);
        assert!((fd - weak_stable_holonomy_jacobian(t, r, s).unwrap()).abs() < 1e-6);
        assert!(weak_stable_holonomy_jacobian(0.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn finite_cusp_chart_is_normalized() {
        // Points approaching 1+√2 inside D get large height.
        let z = Complex { re: CUSP_X - 1e-7, im: 1e-3 };
        assert!(in_domain(z, 0.0));
        assert!(height(z) > 100.0);
        // The chart is compatible with the stabilizer T·ρ⁻¹.
        let z0 = Complex { re: 2.0, im: 0.5 };
        let frame = frame_from(z0, 0.0);
        let moved = &frame * &(&numeric_rho(1) * &numeric_translation(-1));
        let z1 = base_point(&moved);
        let chart = finite_cusp_chart();
        let (h0, h1) = (mobius_im(chart, z0), mobius_im(chart, z1));
        assert!((h0 - h1).abs() < 1e-9 * h0, "{h0} {h1}");
    }

    #[test]
    fn spike_mass_matches_small_y_asymptotics() {
        let y0 = 0.01;
        assert!((spike_mass_below(y0) - y0 / SQRT_2).abs() < 1e-6);
    }
}
