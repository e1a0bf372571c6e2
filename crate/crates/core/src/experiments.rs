//! Monte-Carlo drivers over the period-one horocycle through ω₁.
//!
//! Every driver takes a seed, samples `s ∈ [0, 1]` on a jittered grid and
//! evaluates in parallel with results collected in grid order, so reports are
//! bit-for-bit reproducible.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::KzTracker;
use crate::error::{Error, Result};
use crate::locus::{
    base_point, fiber_angle, height, in_domain, omega1_point, reduce, Complex, Flow, LocusPoint, CUSP_X,
    DOMAIN_AREA, LAMBDA,
};
use crate::surface::{distance_polynomial, eval_quadratic, octagon_holonomy, standard_basis, sublevel_measure, PeriodVector};
use crate::veech::{eval_word, pseudo_anosov_pair, Gen, GroupWord, PseudoAnosovPair};
use crate::{Embedding, RealMat};

/// Balanced coordinates of the cylinder tremor σ.
pub const SIGMA_BAL: [f64; 2] = [0.0, 0.5];

/// `n` jittered grid points `(j + U_j)/n` in `[0, 1)`.
pub fn stratified_s(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|j| (j as f64 + rng.gen::<f64>()) / n as f64).collect()
}

/// Cocycle tracker for `g_t u_s ω₁`, started at the reduced point `u_s ω₁`.
pub fn horocycle_orbit(s: f64, t: f64) -> Result<KzTracker> {
    let w1 = omega1_point();
    let start = reduce(&(&RealMat::horocycle(s) * &w1.frame))?;
    let mut tr = KzTracker::new(&start);
    if t != 0.0 {
        tr.advance(Flow::Geodesic(t))?;
    }
    Ok(tr)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    /// Equal-width bins spanning the data; a single bin if the data is flat.
    pub fn build(values: &[f64], bins: usize) -> Histogram {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bins = if hi > lo { bins.max(1) } else { 1 };
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let n = values.len().max(1) as f64;
        Histogram {
            edges,
            masses: counts.into_iter().map(|c| c as f64 / n).collect(),
        }
    }

    pub const CSV_HEADER: &'static str = "bin_left,bin_right,mass";

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (i, m) in self.masses.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", self.edges[i], self.edges[i + 1], m));
        }
        out
    }
}

/// Largest mass of a window `[c, c + width]` over sorted values.
fn max_window_mass(sorted: &[f64], width: f64) -> f64 {
    let n = sorted.len();
    let mut best = 0;
    let mut j = 0;
    for i in 0..n {
        while j < n && sorted[j] <= sorted[i] + width {
            j += 1;
        }
        best = best.max(j - i);
    }
    best as f64 / n.max(1) as f64
}

/// Choice of `ln C` maximizing `min(big, small)` where big counts
/// `L ≥ ln C + w` and small counts `L < ln C − w`. Returns `(ln C, big, small)`.
fn best_threshold(sorted: &[f64], w: f64) -> (f64, f64, f64) {
    let n = sorted.len();
    let nf = n.max(1) as f64;
    let masses = |c: f64| {
        let small = sorted.partition_point(|&x| x < c - w) as f64 / nf;
        let big = (n - sorted.partition_point(|&x| x < c + w)) as f64 / nf;
        (c, big, small)
    };
    if n == 0 {
        return (f64::NAN, 0.0, 0.0);
    }
    let mut best = masses(sorted[n / 2]);
    // For each small-side count, the lowest admissible cut maximizes the
    // big side.
    for i in 0..n {
        let eps = 1e-9 * sorted[i].abs().max(1.0);
        let cand = masses(sorted[i] + eps + w);
        if cand.1.min(cand.2) > best.1.min(best.2) {
            best = cand;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub asymptotic_tail: f64,
    pub asymptotic_concentration: f64,
    pub desk_tail: f64,
    pub desk_concentration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub t: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub kappa: f64,
    pub rho: f64,
    pub v: [f64; 2],
    /// Histogram of natural-log norms.
    pub histogram: Histogram,
    pub c_t: f64,
    pub big: f64,
    pub small: f64,
    pub middle: f64,
    pub concentration: f64,
    /// First percentile of the norm distribution.
    pub r0: f64,
    pub degenerate: bool,
    pub targets: Targets,
}

impl ScanReport {
    pub fn passes_desk(&self) -> bool {
        self.big >= self.targets.desk_tail
            && self.small >= self.targets.desk_tail
            && self.concentration <= self.targets.desk_concentration
    }
}

/// Natural-log norms `ln‖KZ(g_t, u_s ω₁) v‖` in grid order.
pub fn log_norms(t: f64, v: [f64; 2], s: &[f64]) -> Result<Vec<f64>> {
    s.par_iter()
        .map(|&s| horocycle_orbit(s, t).map(|tr| tr.log_norm_vec(v)))
        .collect()
}

/// Norm statistics of `v` pushed along `g_t u_s ω₁`. Masses are tails
/// relative to a threshold `C_t` with `B = {‖·‖ ≥ C_t/ϱ}` and
/// `S = {‖·‖ < C_t ϱ}`; `C_t` is chosen to maximize the smaller tail.
pub fn norm_scan(t: f64, v: [f64; 2], n: usize, kappa: f64, rho: f64, seed: u64) -> Result<ScanReport> {
    if !(kappa > 0.0 && kappa < 1.0) || !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("kappa {kappa} and rho {rho} must lie in (0, 1)")));
    }
    if n == 0 || !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("need n > 0 and t ≥ 0, got n={n}, t={t}")));
    }
    let s = stratified_s(n, seed);
    let logs = log_norms(t, v, &s)?;
    let mut sorted = logs.clone();
    sorted.sort_by(f64::total_cmp);
    let spread = sorted[n - 1] - sorted[0];
    let degenerate = spread <= 1e-12 * sorted[0].abs().max(1.0);
    let (c, big, small) = best_threshold(&sorted, -rho.ln());
    let concentration = if degenerate { 1.0 } else { max_window_mass(&sorted, -2.0 * kappa.ln()) };
    Ok(ScanReport {
        t,
        n_samples: n,
        seed,
        kappa,
        rho,
        v,
        histogram: Histogram::build(&logs, 40),
        c_t: c.exp(),
        big,
        small,
        middle: 1.0 - big - small,
        concentration,
        r0: sorted[n / 100].exp(),
        degenerate,
        targets: Targets {
            asymptotic_tail: 0.01 - rho,
            asymptotic_concentration: 49.0 / 50.0 + kappa,
            desk_tail: 0.005,
            desk_concentration: 0.995,
        },
    })
}

/// Test function on the unit tangent bundle of the locus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant,
    /// `φ(ln(h/h₀)/w_h)·φ(d(θ, θ₀)/w_θ)` with `φ(x) = (1 − x²)₊²` and `d`
    /// the distance on `ℝ/πℤ`.
    Bump {
        height_center: f64,
        height_width: f64,
        angle_center: f64,
        angle_width: f64,
    },
}

fn bump_profile(x: f64) -> f64 {
    let q = 1.0 - x * x;
    if q > 0.0 {
        q * q
    } else {
        0.0
    }
}

impl TestFunction {
    pub fn height_part(&self, h: f64) -> f64 {
        match *self {
            TestFunction::Constant => 1.0,
            TestFunction::Bump { height_center, height_width, .. } => {
                bump_profile((h / height_center).ln() / height_width)
            }
        }
    }

    pub fn angle_part(&self, theta: f64) -> f64 {
        match *self {
            TestFunction::Constant => 1.0,
            TestFunction::Bump { angle_center, angle_width, .. } => {
                let d = (theta - angle_center).rem_euclid(PI);
                bump_profile(d.min(PI - d) / angle_width)
            }
        }
    }

    pub fn eval(&self, p: &LocusPoint) -> f64 {
        let z = base_point(&p.frame);
        self.height_part(height(z)) * self.angle_part(fiber_angle(&p.frame, z))
    }

    /// Haar average by quadrature, split as [`height_quadrature`] and an
    /// angular average.
    pub fn haar_quadrature(&self) -> f64 {
        if let TestFunction::Constant = self {
            return 1.0;
        }
        height_quadrature(|h| self.height_part(h)) * self.haar_quadrature_angle()
    }

    /// Average of the angular factor over `[0, π)`.
    pub fn haar_quadrature_angle(&self) -> f64 {
        let nth = 4096;
        (0..nth).map(|i| self.angle_part((i as f64 + 0.5) * PI / nth as f64)).sum::<f64>() / nth as f64
    }
}

/// Height at which both cusp regions are embedded standard horoball regions.
pub const CUSP_REGIME: f64 = 5.0;

/// Normalized Haar integral of `F(height)` over the domain. Below
/// [`CUSP_REGIME`] a grid in `(x, ln y)` warped towards the cusp spikes;
/// above it the exact cusp density `2λ/(area·h²)`.
pub fn height_quadrature<F: Fn(f64) -> f64 + Sync>(f: F) -> f64 {
    let (nx, nv) = (2000, 1500);
    let v_hi = (2.0 * CUSP_REGIME).ln();
    // x = ±CUSP_X·(1 − w³) clusters nodes near the spikes.
    let half: f64 = (0..nx)
        .into_par_iter()
        .map(|i| {
            let w = (i as f64 + 0.5) / nx as f64;
            let x = CUSP_X * (1.0 - w * w * w);
            let jac = 3.0 * CUSP_X * w * w / nx as f64;
            let dx = x - 1.0;
            let y_low = (2.0 - dx * dx).max(0.0).sqrt().max(1e-6);
            let v_lo = y_low.ln();
            let dv = (v_hi - v_lo) / nv as f64;
            let mut acc = 0.0;
            for k in 0..nv {
                let y = (v_lo + (k as f64 + 0.5) * dv).exp();
                let h = height(Complex { re: x, im: y });
                if h <= CUSP_REGIME {
                    acc += f(h) / y * dv;
                }
            }
            acc * jac
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    // The domain is symmetric under x ↦ −x.
    let body = 2.0 * half;
    let nh = 4000;
    // h = H₀/u, 2λ dh/h² = (2λ/H₀) du over u ∈ (0, 1].
    let tail: f64 = (0..nh)
        .map(|k| {
            let u = (k as f64 + 0.5) / nh as f64;
            f(CUSP_REGIME / u)
        })
        .sum::<f64>()
        * 2.0
        * LAMBDA
        / CUSP_REGIME
        / nh as f64;
    (body + tail) / DOMAIN_AREA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquiReport {
    pub t: f64,
    pub n: usize,
    pub seed: u64,
    pub f: TestFunction,
    pub orbit_avg: f64,
    /// Average over an independent Haar sample, if one was drawn.
    pub haar_avg: Option<f64>,
    pub haar_n: usize,
    /// Quadrature value of the Haar average; the deviation is measured
    /// against this noise-free reference.
    pub reference: f64,
    pub deviation: f64,
    /// Monte-Carlo standard error of the orbit average, relative to the
    /// reference.
    pub std_error: f64,
    pub desk_threshold: f64,
}

/// Compares the pushed horocycle average of `f` with its Haar average.
pub fn equidistribution_test(t: f64, f: TestFunction, n: usize, haar_n: usize, seed: u64) -> Result<EquiReport> {
    let s = stratified_s(n, seed);
    let vals: Vec<f64> = s
        .par_iter()
        .map(|&s| horocycle_orbit(s, t).map(|tr| f.eval(&tr.point())))
        .collect::<Result<_>>()?;
    let orbit_avg = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - orbit_avg).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    let haar_avg = (haar_n > 0).then(|| {
        let hs = crate::locus::haar_sample(haar_n, seed ^ 0x9e37_79b9_7f4a_7c15);
        // Sampled average over the box, plus the truncated cusp mass where
        // f takes its far-cusp value.
        let box_frac = 1.0 - hs.truncated_mass / DOMAIN_AREA;
        let far = f.height_part(1e6) * f.haar_quadrature_angle();
        let mean = hs.points.par_iter().map(|p| f.eval(p)).collect::<Vec<_>>().iter().sum::<f64>() / haar_n as f64;
        mean * box_frac + far * (1.0 - box_frac)
    });
    let reference = f.haar_quadrature();
    Ok(EquiReport {
        t,
        n,
        seed,
        f,
        orbit_avg,
        haar_avg,
        haar_n,
        reference,
        deviation: (orbit_avg - reference).abs() / reference,
        std_error: (var / n as f64).sqrt() / reference,
        desk_threshold: 0.05,
    })
}

/// Normalized Haar mass of `{height > h}` in the cusp regime, two cusps of
/// width λ each.
pub fn haar_tail_analytic(h: f64) -> f64 {
    2.0 * LAMBDA / (h * DOMAIN_AREA)
}

/// Haar mass of `{height > h}` estimated from a Haar sample; the truncated
/// region of the sampling box lies entirely above `h` when `h < 100`.
pub fn haar_tail_sampled(h: f64, n: usize, seed: u64) -> f64 {
    let hs = crate::locus::haar_sample(n, seed);
    let above = hs.points.par_iter().filter(|p| p.height() > h).count() as f64 / n as f64;
    let trunc = hs.truncated_mass;
    (above * (DOMAIN_AREA - trunc) + trunc) / DOMAIN_AREA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceRow {
    pub t: f64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub height_cut: f64,
    pub n: usize,
    pub seed: u64,
    pub rows: Vec<RecurrenceRow>,
    /// Sampled Haar mass above `height_cut/2`.
    pub reference_half: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Fraction of the pushed horocycle above `height_cut`, per `t`.
pub fn recurrence_profile(t_list: &[f64], height_cut: f64, n: usize, haar_n: usize, seed: u64) -> Result<RecurrenceReport> {
    let s = stratified_s(n, seed);
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let above = s
            .par_iter()
            .map(|&s| horocycle_orbit(s, t).map(|tr| tr.point().height() > height_cut))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&b| b)
            .count();
        rows.push(RecurrenceRow { t, fraction: above as f64 / n as f64 });
    }
    let reference_half = haar_tail_sampled(height_cut / 2.0, haar_n, seed ^ 0x5851_f42d_4c95_7f2d);
    let bound = 4.0 * reference_half;
    let within_bound = rows.iter().all(|r| r.fraction <= bound);
    Ok(RecurrenceReport {
        height_cut,
        n,
        seed,
        rows,
        reference_half,
        bound,
        within_bound,
    })
}

/// Frobenius norm of `log h` for `h ∈ SL(2, ℝ)` near the identity.
pub fn log_norm_sl2(h: &RealMat) -> f64 {
    let tr = 0.5 * (h.a + h.d);
    let x = RealMat::new(h.a - tr, h.b, h.c, h.d - tr);
    let k = if tr > 1.0 + 1e-12 {
        let th = tr.acosh();
        th / th.sinh()
    } else if tr < 1.0 - 1e-12 {
        if tr <= -1.0 {
            return f64::INFINITY;
        }
        let th = tr.acos();
        th / th.sin()
    } else {
        1.0
    };
    x.frobenius() * k
}

/// Points whose geodesic orbit stays within `radius` of the periodic orbit
/// through `center` for times `r ∈ [0, period]`, in the right-invariant metric.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BowenBall {
    pub center: LocusPoint,
    pub period: f64,
    pub radius: f64,
}

impl BowenBall {
    fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let steps = ((self.period / (self.radius / 4.0)).ceil() as usize).max(1);
        (0..=steps).map(move |i| self.period * i as f64 / steps as f64)
    }

    /// Membership of `h·center` where `h` is a group element near the
    /// identity: checks `‖log(g_r h g_{−r})‖ ≤ radius` on the time grid.
    pub fn contains_offset(&self, h: &RealMat) -> bool {
        self.grid().all(|r| {
            let (e, ei) = (r.exp(), (-r).exp());
            let conj = RealMat::new(h.a, h.b * e * e, h.c * ei * ei, h.d);
            log_norm_sl2(&conj) <= self.radius
        })
    }

    /// Offset `h` with `x = h·center` of smallest norm among nearby lifts.
    pub fn offset(&self, x: &RealMat) -> (RealMat, f64) {
        let ci = self.center.frame.inverse().expect("frames are invertible");
        lift_candidates()
            .iter()
            .map(|g| {
                let h = &(x * g) * &ci;
                let d = log_norm_sl2(&h);
                (h, d)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty")
    }

    pub fn contains(&self, x: &RealMat) -> bool {
        let (h, d) = self.offset(x);
        d <= self.radius && self.contains_offset(&h)
    }
}

/// Group elements relating reduced frames of nearby points across the
/// domain boundary.
fn lift_candidates() -> &'static [RealMat] {
    use std::sync::OnceLock;
    static C: OnceLock<Vec<RealMat>> = OnceLock::new();
    C.get_or_init(|| {
        let mut out = Vec::new();
        let gens = [
            GroupWord::translation(1),
            GroupWord::translation(-1),
            GroupWord::single(Gen::Rho, 1),
            GroupWord::single(Gen::Rho, -1),
        ];
        let mut words = vec![GroupWord::new()];
        for a in &gens {
            words.push(a.clone());
            for b in &gens {
                words.push(a.concat(b));
            }
        }
        for w in words {
            let m = eval_word(&w).embed(Embedding::Phi1);
            out.push(m.scale(&-1.0));
            out.push(m);
        }
        out
    })
}

/// Reduced frame on the closed geodesic of a hyperbolic Veech element.
pub fn periodic_frame(m: &RealMat) -> Result<RealMat> {
    let m = if m.trace() < 0.0 { m.scale(&-1.0) } else { m.clone() };
    let tr = m.trace();
    if tr <= 2.0 {
        return Err(Error::InvalidArgument(format!("trace {tr} is not hyperbolic")));
    }
    let disc = (tr * tr / 4.0 - 1.0).sqrt();
    let eig = |l: f64| -> [f64; 2] {
        // (m − l)v = 0
        if m.b.abs() > m.c.abs() {
            [m.b, l - m.a]
        } else {
            [l - m.d, m.c]
        }
    };
    let (v1, v2) = (eig(tr / 2.0 + disc), eig(tr / 2.0 - disc));
    let det = v1[0] * v2[1] - v2[0] * v1[1];
    let k = det.abs().sqrt();
    let sg = det.signum();
    let p = RealMat::new(v1[0] / k, sg * v2[0] / k, v1[1] / k, sg * v2[1] / k);
    Ok(p.inverse()?)
}

/// Bowen ball around the closed geodesic of `word` traversed for `period`;
/// powers share the axis, so only the base word is evaluated.
pub fn bowen_ball_for(word: &GroupWord, period: f64, radius: f64) -> Result<BowenBall> {
    let f = periodic_frame(&eval_word(word).embed(Embedding::Phi1))?;
    Ok(BowenBall {
        center: reduce(&f)?,
        period,
        radius,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub period: f64,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub mass_full: f64,
    pub mass_half: f64,
    pub ratio: f64,
    pub bound: f64,
}

/// Monte-Carlo Haar masses of Bowen balls of radius ρ and ρ/2. Offsets are
/// drawn in coordinates `h = û_x · diag(e^{a/2}, e^{−a/2}) · u_y` whose Haar
/// density is `e^a/2`.
pub fn bowen_doubling(period: f64, radius: f64, samples: usize, seed: u64) -> DoublingReport {
    let full = BowenBall { center: omega1_point(), period, radius };
    let half = BowenBall { radius: radius / 2.0, ..full.clone() };
    let (bx, ba, by) = (2.0 * radius, 2.0 * radius, 2.0 * radius * (-2.0 * period).exp());
    let volume = 8.0 * bx * ba * by;
    let chunk = 4096;
    let seeds: Vec<u64> = {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..samples.div_ceil(chunk)).map(|_| r.gen()).collect()
    };
    let sums: Vec<(f64, f64)> = seeds
        .par_iter()
        .enumerate()
        .map(|(ci, &cs)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cs);
            let m = chunk.min(samples - ci * chunk);
            let (mut sf, mut sh) = (0.0, 0.0);
            for _ in 0..m {
                let x = rng.gen_range(-bx..bx);
                let a = rng.gen_range(-ba..ba);
                let y = rng.gen_range(-by..by);
                let h = &(&RealMat::opposite_horocycle(x) * &RealMat::diag((a / 2.0).exp(), (-a / 2.0).exp()))
                    * &RealMat::horocycle(y);
                let w = 0.5 * a.exp();
                if full.contains_offset(&h) {
                    sf += w;
                    if half.contains_offset(&h) {
                        sh += w;
                    }
                }
            }
            (sf, sh)
        })
        .collect();
    let (sf, sh) = sums.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let mass_full = sf / samples as f64 * volume;
    let mass_half = sh / samples as f64 * volume;
    DoublingReport {
        period,
        radius,
        samples,
        seed,
        mass_full,
        mass_half,
        ratio: mass_full / mass_half,
        bound: 30.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub s: f64,
    pub tau: f64,
    pub log_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub eps: f64,
    pub eps2: f64,
    pub t: f64,
    pub n: usize,
    pub seed: u64,
    pub ell_a: f64,
    pub ell_b: f64,
    pub pair_ratio: f64,
    pub radius: f64,
    pub visits_a: usize,
    pub visits_b: usize,
    pub matched: usize,
    /// `‖KZ v‖` ratios `b/a` over matched pairs.
    pub ratios: Vec<f64>,
    pub fraction_below: Option<f64>,
    pub doubling: Vec<DoublingReport>,
    pub inconclusive: bool,
}

/// Scans `g_τ u_s ω₁` for entries into Bowen balls around the pair's
/// periodic orbits and compares final cocycle norms over matched visits.
pub fn matching_demo(eps: f64, eps2: f64, t: f64, n: usize, seed: u64) -> Result<MatchReport> {
    let pair: PseudoAnosovPair = pseudo_anosov_pair(eps)?;
    let radius = 1e-3 * eps2;
    let ball_a = bowen_ball_for(&pair.word_a, pair.ell_a, radius)?;
    let ball_b = bowen_ball_for(&pair.word_b, pair.ell_b, radius)?;
    let s = stratified_s(n, seed);
    let dtau = radius / 4.0;
    let scan = |ball: &BowenBall| -> Result<Vec<Visit>> {
        let t_end = t - ball.period;
        let found: Vec<Option<Visit>> = s
            .par_iter()
            .map(|&s| -> Result<Option<Visit>> {
                if t_end < 0.0 {
                    return Ok(None);
                }
                let mut tr = horocycle_orbit(s, 0.0)?;
                let mut tau = 0.0;
                while tau <= t_end {
                    if ball.contains(&tr.frame) {
                        let mut fin = tr.clone();
                        fin.advance(Flow::Geodesic(t - tau))?;
                        return Ok(Some(Visit { s, tau, log_norm: fin.log_norm_vec(SIGMA_BAL) }));
                    }
                    // Coarse steps far from the ball, fine steps near it.
                    let (_, d) = ball.offset(&tr.frame);
                    let step = (d - radius).max(dtau).min(0.05).min(t_end - tau + dtau);
                    tr.advance(Flow::Geodesic(step))?;
                    tau += step;
                }
                Ok(None)
            })
            .collect::<Result<_>>()?;
        Ok(found.into_iter().flatten().collect())
    };
    let va = scan(&ball_a)?;
    let vb = scan(&ball_b)?;
    // Injective greedy matching on s.
    let mut used = vec![false; vb.len()];
    let mut ratios = Vec::new();
    for a in &va {
        let tol = eps2 * (-2.0 * a.tau).exp() / 1e3;
        let hit = vb
            .iter()
            .enumerate()
            .filter(|(j, b)| !used[*j] && (b.s - a.s).abs() <= tol)
            .min_by(|x, y| (x.1.s - a.s).abs().total_cmp(&(y.1.s - a.s).abs()));
        if let Some((j, b)) = hit {
            used[j] = true;
            ratios.push((b.log_norm - a.log_norm).exp());
        }
    }
    let below = ratios.iter().filter(|&&r| r <= eps.sqrt()).count();
    let doubling = [0.05, 0.02]
        .iter()
        .map(|&r| bowen_doubling(pair.ell_a, r, 200_000, seed))
        .collect();
    Ok(MatchReport {
        eps,
        eps2,
        t,
        n,
        seed,
        ell_a: pair.ell_a,
        ell_b: pair.ell_b,
        pair_ratio: pair.ratio,
        radius,
        visits_a: va.len(),
        visits_b: vb.len(),
        matched: ratios.len(),
        fraction_below: (!ratios.is_empty()).then(|| below as f64 / ratios.len() as f64),
        inconclusive: ratios.is_empty(),
        ratios,
        doubling,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyRow {
    pub delta: f64,
    /// Mean exact sublevel fraction over the B-branch.
    pub exact: f64,
    /// Mean grid-count fraction over the B-branch.
    pub grid: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceReport {
    pub t: f64,
    pub rho: f64,
    pub n_s: usize,
    pub n_ell: usize,
    pub seed: u64,
    pub c_t: f64,
    pub s_branch: usize,
    pub b_branch: usize,
    pub s_branch_max_distance: f64,
    pub s_branch_within: bool,
    pub occupancy: Vec<OccupancyRow>,
    /// `occupancy(δ)/occupancy(2δ)` for consecutive doubling pairs.
    pub doubling_ratios: Vec<f64>,
    pub linear_within: bool,
}

/// Distance polynomial of `ℓ ↦ g_t Trem_{u_sω₁, σ}(ℓ)` to the locus, from
/// the reduced frame and the balanced vector `KZ(g_t, u_s ω₁)·SIGMA_BAL`.
pub fn tremor_distance_polynomial(frame: &RealMat, kzv: [f64; 2], t: f64) -> Result<(f64, f64, f64)> {
    let hol = octagon_holonomy(|x| x.embed(crate::Embedding::Phi1));
    let ghol = octagon_holonomy(|x| x.galois().embed(crate::Embedding::Phi1));
    let q = PeriodVector::linear_image(&hol, [frame.a, frame.b, frame.c, frame.d]);
    let et = t.exp();
    let beta = PeriodVector {
        x: std::array::from_fn(|i| et * (kzv[0] * ghol[i][0] + kzv[1] * ghol[i][1])),
        y: [0.0; 4],
    };
    let basis = standard_basis(|x| x.embed(crate::Embedding::Phi1));
    distance_polynomial(&q, &beta, &basis)
}

/// Near-locus occupancy of pushed tremor segments over the `(s, ℓ)` grid.
pub fn avoidance_scan(t: f64, rho: f64, n_s: usize, n_ell: usize, deltas: &[f64], seed: u64) -> Result<AvoidanceReport> {
    let s = stratified_s(n_s, seed);
    let data: Vec<(f64, (f64, f64, f64))> = s
        .par_iter()
        .map(|&s| -> Result<(f64, (f64, f64, f64))> {
            let tr = horocycle_orbit(s, t)?;
            let ls = tr.log_scale();
            let mv = tr.normalized().apply(SIGMA_BAL);
            let kzv = [mv[0] * ls.exp(), mv[1] * ls.exp()];
            Ok((tr.log_norm_vec(SIGMA_BAL), tremor_distance_polynomial(&tr.frame, kzv, t)?))
        })
        .collect::<Result<_>>()?;
    let mut sorted: Vec<f64> = data.iter().map(|d| d.0).collect();
    sorted.sort_by(f64::total_cmp);
    let (ln_c, _, _) = best_threshold(&sorted, -rho.ln());
    let c_t = ln_c.exp();
    let ell_max = (-t).exp() / c_t;
    let grid: Vec<f64> = (0..n_ell)
        .map(|k| -ell_max + 2.0 * ell_max * (k as f64 + 0.5) / n_ell as f64)
        .collect();
    let (mut s_count, mut b_count, mut s_max) = (0, 0, 0.0f64);
    let mut occ = vec![(0.0, 0.0); deltas.len()];
    for (ln, p) in &data {
        if *ln < ln_c + rho.ln() {
            s_count += 1;
            for &l in &grid {
                s_max = s_max.max(eval_quadratic(*p, l).max(0.0).sqrt());
            }
        } else if *ln >= ln_c - rho.ln() {
            b_count += 1;
            for (k, &d) in deltas.iter().enumerate() {
                occ[k].0 += sublevel_measure(*p, -ell_max, ell_max, d) / (2.0 * ell_max);
                occ[k].1 += grid.iter().filter(|&&l| eval_quadratic(*p, l) < d * d).count() as f64 / n_ell as f64;
            }
        }
    }
    let bn = b_count.max(1) as f64;
    let occupancy: Vec<OccupancyRow> = deltas
        .iter()
        .zip(&occ)
        .map(|(&delta, o)| OccupancyRow { delta, exact: o.0 / bn, grid: o.1 / bn })
        .collect();
    let mut doubling_ratios = Vec::new();
    for i in 0..occupancy.len() {
        for j in 0..occupancy.len() {
            if (occupancy[j].delta / occupancy[i].delta - 2.0).abs() < 1e-9 {
                doubling_ratios.push(occupancy[i].exact / occupancy[j].exact);
            }
        }
    }
    let linear_within = b_count > 0 && doubling_ratios.iter().all(|r| (r / 0.5 - 1.0).abs() <= 0.3);
    Ok(AvoidanceReport {
        t,
        rho,
        n_s,
        n_ell,
        seed,
        c_t,
        s_branch: s_count,
        b_branch: b_count,
        s_branch_max_distance: s_max,
        s_branch_within: s_max < 2.0 * rho,
        occupancy,
        doubling_ratios,
        linear_within,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    d
}

/// Sanity check that a frame lies over the domain.
pub fn over_domain(f: &RealMat) -> bool {
    in_domain(base_point(f), 1e-9)
}
