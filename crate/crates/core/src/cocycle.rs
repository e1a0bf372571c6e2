//! The Kontsevich–Zorich cocycle on the balanced plane, accumulated along
//! flow orbits as products of Galois-conjugate monodromy matrices.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locus::{flow_frame, Flow, LocusPoint};
use crate::matrix::line_angle;
use crate::veech::{galois_rep, GroupWord, NumericRep};
use crate::{Embedding, ExactMat, RealMat};

/// Abort threshold for exact word accumulation.
pub const MAX_WORD_LETTERS: usize = 1_000_000;

pub(crate) fn numeric_rep() -> &'static NumericRep {
    static REP: OnceLock<NumericRep> = OnceLock::new();
    REP.get_or_init(NumericRep::new)
}

/// Cocycle value with its word, exact matrix and numeric shadow.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CocycleValue {
    pub word: GroupWord,
    pub exact: ExactMat,
    /// φ₂ image, accumulated letter by letter in double precision.
    pub numeric: RealMat,
    pub norm: f64,
}

impl CocycleValue {
    pub fn from_word(word: GroupWord) -> Self {
        let exact = galois_rep(&word);
        let numeric = numeric_rep().eval(&word);
        let norm = numeric.norm();
        CocycleValue {
            word,
            exact,
            numeric,
            norm,
        }
    }

    /// Largest entrywise gap between the numeric product and the embedded
    /// exact matrix, relative to the exact norm.
    pub fn embedding_mismatch(&self) -> f64 {
        let e = self.exact.embed(Embedding::Phi1);
        self.numeric.max_abs_diff(&e) / e.norm().max(1.0)
    }
}

/// Runs `path` from `x`, returning the cocycle over the path and the end
/// point. The end point's word is the concatenation of `x.word` and the
/// path word.
pub fn kz_along(x: &LocusPoint, path: &[Flow]) -> Result<(CocycleValue, LocusPoint)> {
    let mut word = GroupWord::new();
    let mut y = x.clone();
    for &step in path {
        let mut overflow = false;
        let (frame, tie) = flow_frame(&y.frame, step, |w| {
            word.append(w);
            overflow |= word.len() > MAX_WORD_LETTERS;
        })?;
        if overflow {
            return Err(Error::WordOverflow(word.len()));
        }
        y = LocusPoint {
            frame,
            word: GroupWord::new(),
            domain_certificate: true,
            tie: y.tie || tie,
        };
    }
    let end = LocusPoint {
        word: x.word.concat(&word),
        domain_certificate: crate::locus::in_domain(y.z(), 1e-9),
        ..y
    };
    Ok((CocycleValue::from_word(word), end))
}

/// Numeric cocycle along an orbit, renormalized so arbitrarily long orbits
/// never overflow. The matrix `scale·m` is the balanced monodromy.
#[derive(Clone, Debug)]
pub struct KzTracker {
    pub frame: RealMat,
    m: RealMat,
    log_scale: f64,
    pub letters: u64,
    pub max_height: f64,
}

impl KzTracker {
    pub fn new(x: &LocusPoint) -> Self {
        KzTracker {
            frame: x.frame.clone(),
            m: RealMat::identity(),
            log_scale: 0.0,
            letters: 0,
            max_height: crate::locus::height(x.z()),
        }
    }

    pub fn advance(&mut self, step: Flow) -> Result<()> {
        let rep = numeric_rep();
        let mut m = self.m.clone();
        let mut letters = 0;
        let (frame, _) = flow_frame(&self.frame, step, |w| {
            for &l in w.letters() {
                m = rep.letter(l) * &m;
                letters += 1;
            }
        })?;
        let s = m.frobenius();
        self.m = m.scale(&(1.0 / s));
        self.log_scale += s.ln();
        self.frame = frame;
        self.letters += letters;
        self.max_height = self
            .max_height
            .max(crate::locus::height(crate::locus::base_point(&self.frame)));
        Ok(())
    }

    pub fn point(&self) -> LocusPoint {
        LocusPoint {
            frame: self.frame.clone(),
            word: GroupWord::new(),
            domain_certificate: true,
            tie: false,
        }
    }

    /// Normalized matrix; the cocycle equals `exp(log_scale)` times this.
    pub fn normalized(&self) -> &RealMat {
        &self.m
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn log_norm(&self) -> f64 {
        self.m.norm().ln() + self.log_scale
    }

    pub fn log_norm_vec(&self, v: [f64; 2]) -> f64 {
        RealMat::vec_norm(self.m.apply(v)).ln() + self.log_scale
    }
}

/// A line in ℝ², stored as an angle in `[0, π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub angle: f64,
}

impl Direction {
    pub fn new(angle: f64) -> Self {
        Direction {
            angle: line_angle(angle.cos(), angle.sin()),
        }
    }

    pub fn from_vec(v: [f64; 2]) -> Self {
        Direction {
            angle: line_angle(v[0], v[1]),
        }
    }

    pub fn unit(&self) -> [f64; 2] {
        [self.angle.cos(), self.angle.sin()]
    }

    /// `|sin∠|`, a metric on the projective line.
    pub fn dist(&self, o: &Direction) -> f64 {
        (self.angle - o.angle).sin().abs()
    }

    pub fn image(&self, m: &RealMat) -> Direction {
        Direction::from_vec(m.apply(self.unit()))
    }

    pub fn perp(&self) -> Direction {
        Direction::new(self.angle + PI / 2.0)
    }
}

/// Most contracted input direction and the image of the most expanded one.
pub fn xi_directions(m: &RealMat) -> Result<(Direction, Direction)> {
    let s = m.svd();
    let ratio = s.s_max / s.s_min;
    if !(ratio >= 1.0 + 1e-9) {
        return Err(Error::Isotropic(ratio));
    }
    Ok((
        Direction::new(s.in_max + PI / 2.0),
        Direction { angle: s.out_max },
    ))
}

pub fn xi_in(m: &RealMat) -> Result<Direction> {
    Ok(xi_directions(m)?.0)
}

/// `‖M v‖`.
pub fn norm_and_vector(m: &RealMat, v: [f64; 2]) -> f64 {
    RealMat::vec_norm(m.apply(v))
}

/// Both sides of the three singular-product inequalities for one triple.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SingularProductMargins {
    /// `(‖B‖/‖A‖)² − |⟨v, w⟩|`.
    pub first: f64,
    /// `(‖A‖/‖B‖)² − |⟨ξ_in(B), w⟩|`.
    pub second: f64,
    /// `(‖A‖² + ‖C‖²)/‖B‖² − sin²∠(ξ_in(ABC), C⁻¹ξ_in(B))`, as stated.
    pub third: f64,
    /// `‖C‖²(‖A‖² + 1)/‖B‖² − |sin∠|`, the bound obtained by chaining the
    /// first two inequalities.
    pub third_chained: f64,
    pub sin_angle: f64,
}

/// Evaluates the inequalities for `(A, B, C)`; `None` when a precondition
/// fails (a factor with norm below `min_norm`, or a factor or product too
/// close to a rotation for `ξ_in` to be defined).
pub fn singular_product_check(
    a: &RealMat,
    b: &RealMat,
    c: &RealMat,
    min_norm: f64,
) -> Option<SingularProductMargins> {
    let (na, nb, nc) = (a.norm(), b.norm(), c.norm());
    let ab = a * b;
    let bc = b * c;
    let abc = &ab * c;
    if na < min_norm || nb < min_norm || nc < min_norm {
        return None;
    }
    for m in [a, b, &bc, &abc, &ab] {
        xi_in(m).ok()?;
    }
    let xa = xi_in(a).ok()?;
    let xb = xi_in(b).ok()?;
    let w = xi_in(&ab).ok()?.perp();
    let b_inv = b.inverse().ok()?;
    let c_inv = c.inverse().ok()?;
    let v = xa.image(&b_inv);
    let first = (nb / na).powi(2) - v.dist(&w.perp());
    let second = (na / nb).powi(2) - xb.dist(&w.perp());
    let target = xb.image(&c_inv);
    let sin_angle = xi_in(&abc).ok()?.dist(&target);
    let third = (na * na + nc * nc) / (nb * nb) - sin_angle * sin_angle;
    let third_chained = nc * nc * (na * na + 1.0) / (nb * nb) - sin_angle;
    Some(SingularProductMargins {
        first,
        second,
        third,
        third_chained,
        sin_angle,
    })
}

/// One CSV row of a cocycle scan.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CocycleRow {
    pub s: f64,
    pub t: f64,
    pub log_norm: f64,
    pub log_norm_v: f64,
    pub xi_in: f64,
    pub xi_out: f64,
}

impl CocycleRow {
    pub const HEADER: &'static str = "s,t,log_norm,log_norm_v,xi_in,xi_out";

    pub fn csv(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.s, self.t, self.log_norm, self.log_norm_v, self.xi_in, self.xi_out
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locus::{frame_from, reduce, Complex};
    use crate::veech::{eval_word, tau1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng) -> LocusPoint {
        let z = Complex {
            re: rng.gen_range(-2.0..2.0),
            im: rng.gen_range(1.5..4.0),
        };
        reduce(&frame_from(z, rng.gen_range(0.0..PI))).unwrap().rebased()
    }

    #[test]
    fn cocycle_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let x = random_point(&mut rng);
            let g = Flow::Geodesic(rng.gen_range(-2.0..2.0));
            let h = Flow::Horocycle(rng.gen_range(-2.0..2.0));
            let (kz_gh, _) = kz_along(&x, &[h, g]).unwrap();
            let (kz_h, hx) = kz_along(&x, &[h]).unwrap();
            let (kz_g, _) = kz_along(&hx.rebased(), &[g]).unwrap();
            assert_eq!(kz_gh.exact, &kz_g.exact * &kz_h.exact);
            assert!(kz_gh.embedding_mismatch() < 1e-9);
        }
    }

    #[test]
    fn periodic_tau1_orbit() {
        let m = eval_word(&tau1()).embed(Embedding::Phi1);
        let ell = (m.trace() / 2.0).acosh();
        // Columns of P are eigenvectors for e^ℓ and e^{−ℓ}.
        let ev = |lam: f64| [m.b, lam - m.a];
        let (v1, v2) = (ev(ell.exp()), ev((-ell).exp()));
        let p = RealMat::new(v1[0], v2[0], v1[1], v2[1]);
        let p = p.scale(&(1.0 / p.det().abs().sqrt()));
        let p = if p.det() < 0.0 { RealMat::new(p.a, -p.b, p.c, -p.d) } else { p };
        let f = p.inverse().unwrap();
        let x = reduce(&f).unwrap();
        let w0 = eval_word(&x.word);
        let (kz, end) = kz_along(&x.rebased(), &[Flow::Geodesic(ell)]).unwrap();
        assert!(end.frame.max_abs_diff(&x.frame) < 1e-8);
        let t1 = eval_word(&tau1());
        let expect = &(&w0.inverse().unwrap() * &t1.inverse().unwrap()) * &w0;
        assert_eq!(eval_word(&kz.word), expect);
        assert_eq!(kz.exact.trace(), galois_rep(&tau1()).trace());
    }

    #[test]
    fn xi_diag() {
        let (i, o) = xi_directions(&RealMat::diag(2.0, 0.5)).unwrap();
        assert!((i.angle - PI / 2.0).abs() < 1e-15);
        assert!(o.angle.abs() < 1e-15);
        assert!(xi_directions(&RealMat::rotation(0.3)).is_err());
    }

    #[test]
    fn xi_rotation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let m = RealMat::new(rng.gen(), rng.gen(), rng.gen(), rng.gen());
            let k = rng.gen_range(0.0..PI);
            let lhs = xi_in(&(&m * &RealMat::rotation(k))).unwrap();
            let rhs = xi_in(&m).unwrap().image(&RealMat::rotation(-k));
            assert!(lhs.dist(&rhs) < 1e-8);
        }
    }

    #[test]
    fn norm_sandwich() {
        let m = RealMat::new(3.0, 1.0, 2.0, 1.0);
        let (i, _) = xi_directions(&m).unwrap();
        let n = m.norm();
        assert!((norm_and_vector(&m, i.unit()) - 1.0 / n).abs() < 1e-8);
        let top = i.perp().unit();
        assert!((norm_and_vector(&m, top) - n).abs() < 1e-8);
    }

    #[test]
    fn singular_product_trivial() {
        let b = RealMat::diag(100.0, 0.01);
        let id = RealMat::identity();
        let r = singular_product_check(&id, &b, &id, 0.0);
        // Identity factors are isotropic, so the triple is skipped.
        assert!(r.is_none());
        let a = RealMat::diag(1.5, 1.0 / 1.5);
        let r = singular_product_check(&a, &b, &a, 1.0).unwrap();
        assert!(r.sin_angle < 1e-12);
        assert!(r.third >= 0.0 && r.third_chained >= 0.0);
    }
}
