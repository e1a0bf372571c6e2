//! The Veech group of the regular octagon: generators, words, the Galois
//! representation on the balanced plane, Schottky powers and pseudo-Anosov
//! pairs with nearly equal periods but very different balanced norms.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Embedding, QSqrt2};
use crate::matrix::{ConjClass, Mat2};
use crate::{ExactMat, RealMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gen {
    Gamma,
    Nu3,
    Nu4,
    Rho,
}

impl Gen {
    pub const ALL: [Gen; 4] = [Gen::Gamma, Gen::Nu3, Gen::Nu4, Gen::Rho];

    /// Order of the generator as a matrix.
    pub fn order(self) -> i32 {
        match self {
            Gen::Gamma | Gen::Nu3 => 2,
            Gen::Nu4 => 4,
            Gen::Rho => 8,
        }
    }

    pub fn matrix(self) -> ExactMat {
        let q = QSqrt2::int;
        match self {
            Gen::Gamma => Mat2::new(q(-1, 0), q(2, 2), q(0, 0), q(1, 0)),
            Gen::Nu3 => Mat2::new(q(0, 0), q(1, 0), q(1, 0), q(0, 0)),
            Gen::Nu4 => Mat2::new(q(0, 0), q(1, 0), q(-1, 0), q(0, 0)),
            Gen::Rho => {
                let h = QSqrt2::half_sqrt2();
                Mat2::new(h.clone(), -h.clone(), h.clone(), h)
            }
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Gen::Gamma => "gamma",
            Gen::Nu3 => "nu3",
            Gen::Nu4 => "nu4",
            Gen::Rho => "rho",
        }
    }
}

/// `λ = 2 + 2√2`, the translation length of the horizontal cusp parabolic.
pub fn cusp_width() -> QSqrt2 {
    QSqrt2::int(2, 2)
}

pub fn generators() -> Vec<(Gen, ExactMat)> {
    Gen::ALL.iter().map(|&g| (g, g.matrix())).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub gen: Gen,
    /// Always in `1..order`.
    pub exp: i32,
}

/// A freely reduced word in the generators, with exponents reduced modulo
/// the generator orders.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(gen: Gen, exp: i32) -> Self {
        let mut w = Self::new();
        w.push(gen, exp);
        w
    }

    pub fn from_letters<I: IntoIterator<Item = (Gen, i32)>>(it: I) -> Self {
        let mut w = Self::new();
        for (g, e) in it {
            w.push(g, e);
        }
        w
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Appends `gen^exp`, merging with the last letter when possible.
    pub fn push(&mut self, gen: Gen, exp: i32) {
        let n = gen.order();
        let mut e = exp.rem_euclid(n);
        if let Some(last) = self.letters.last_mut() {
            if last.gen == gen {
                e = (e + last.exp).rem_euclid(n);
                self.letters.pop();
            }
        }
        if e != 0 {
            self.letters.push(Letter { gen, exp: e });
        }
    }

    pub fn append(&mut self, other: &GroupWord) {
        for l in &other.letters {
            self.push(l.gen, l.exp);
        }
    }

    pub fn concat(&self, other: &GroupWord) -> GroupWord {
        let mut w = self.clone();
        w.append(other);
        w
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord::from_letters(self.letters.iter().rev().map(|l| (l.gen, -l.exp)))
    }

    pub fn pow(&self, k: u32) -> GroupWord {
        let mut w = GroupWord::new();
        for _ in 0..k {
            w.append(self);
        }
        w
    }

    /// `T^k` with `T = γν₃ν₄ = [[1, λ], [0, 1]]`.
    pub fn translation(k: i64) -> GroupWord {
        let t = GroupWord::from_letters([(Gen::Gamma, 1), (Gen::Nu3, 1), (Gen::Nu4, 1)]);
        let base = if k >= 0 { t } else { t.inverse() };
        base.pow(k.unsigned_abs() as u32)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| {
                if l.exp == 1 {
                    l.gen.symbol().to_string()
                } else {
                    format!("{}^{}", l.gen.symbol(), l.exp)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// `τ₁ = γν₃`.
pub fn tau1() -> GroupWord {
    GroupWord::from_letters([(Gen::Gamma, 1), (Gen::Nu3, 1)])
}

/// `τ₂ = (γν₄)²`.
pub fn tau2() -> GroupWord {
    GroupWord::from_letters([(Gen::Gamma, 1), (Gen::Nu4, 1)]).pow(2)
}

/// Exact product of the letters, left to right.
pub fn eval_word(w: &GroupWord) -> ExactMat {
    let mut acc = ExactMat::identity();
    for l in w.letters() {
        acc = &acc * &l.gen.matrix().pow(l.exp as u32);
    }
    acc
}

/// Monodromy on the balanced plane: the transposed Galois conjugate, so that
/// `galois_rep(w₁w₂) = galois_rep(w₂)·galois_rep(w₁)`.
pub fn galois_rep(w: &GroupWord) -> ExactMat {
    eval_word(w).galois().transpose()
}

/// φ₂ images of the transposed Galois conjugates of each generator power,
/// for fast numeric accumulation of long words.
#[derive(Clone, Debug)]
pub struct NumericRep {
    table: Vec<Vec<RealMat>>,
}

impl Default for NumericRep {
    fn default() -> Self {
        Self::new()
    }
}

impl NumericRep {
    pub fn new() -> Self {
        let table = Gen::ALL
            .iter()
            .map(|&g| {
                (0..g.order())
                    .map(|e| {
                        g.matrix()
                            .pow(e as u32)
                            .galois()
                            .transpose()
                            .embed(Embedding::Phi1)
                    })
                    .collect()
            })
            .collect();
        NumericRep { table }
    }

    pub fn letter(&self, l: Letter) -> &RealMat {
        &self.table[l.gen as usize][l.exp as usize]
    }

    /// Numeric `galois_rep(w)`.
    pub fn eval(&self, w: &GroupWord) -> RealMat {
        let mut acc = RealMat::identity();
        for &l in w.letters() {
            acc = self.letter(l) * &acc;
        }
        acc
    }
}

/// Translation length `arccosh(|tr|/2)` under φ₁.
pub fn period(m: &ExactMat) -> f64 {
    (m.trace().embed(Embedding::Phi1).abs() / 2.0).acosh()
}

/// Spectral norm of the balanced-plane monodromy.
pub fn balanced_norm(w: &GroupWord) -> f64 {
    galois_rep(w).embed(Embedding::Phi1).norm()
}

fn is_hyperbolic(m: &ExactMat) -> bool {
    m.classify() == ConjClass::Hyperbolic
}

/// Smallest `N ≤ max_n` for which every `τ₂^{mN}τ₁^{nN}`, `1 ≤ m, n ≤ 10`,
/// is hyperbolic.
pub fn schottky_power(max_n: u32) -> Result<u32> {
    if max_n == 0 {
        return Err(Error::InvalidArgument("max_N must be at least 1".into()));
    }
    let t1 = eval_word(&tau1());
    let t2 = eval_word(&tau2());
    'outer: for n_pow in 1..=max_n {
        let a = t2.pow(n_pow);
        let b = t1.pow(n_pow);
        let mut a_pows = vec![a.clone()];
        let mut b_pows = vec![b.clone()];
        for _ in 1..10 {
            a_pows.push(a_pows.last().unwrap() * &a);
            b_pows.push(b_pows.last().unwrap() * &b);
        }
        for am in &a_pows {
            for bn in &b_pows {
                if !is_hyperbolic(&(am * bn)) {
                    continue 'outer;
                }
            }
        }
        return Ok(n_pow);
    }
    Err(Error::SearchFailed(format!(
        "no Schottky power up to {max_n}"
    )))
}

/// `‖σ(τ₁ⁿ)‖ / ‖σ(τ₂^m τ₁ⁿ)‖` for `m in 1..=m_max`, `n in 1..=n_max`,
/// indexed `[n-1][m-1]`.
pub fn norm_ratio_table(m_max: u32, n_max: u32) -> Vec<Vec<f64>> {
    let s1 = eval_word(&tau1()).galois();
    let s2 = eval_word(&tau2()).galois();
    let mut rows = Vec::with_capacity(n_max as usize);
    let mut s1n = ExactMat::identity();
    for _ in 0..n_max {
        s1n = &s1n * &s1;
        let base = s1n.embed(Embedding::Phi1).norm();
        let mut prod = s1n.clone();
        let mut row = Vec::with_capacity(m_max as usize);
        for _ in 0..m_max {
            prod = &s2 * &prod;
            row.push(base / prod.embed(Embedding::Phi1).norm());
        }
        rows.push(row);
    }
    rows
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PseudoAnosovPair {
    pub word_a: GroupWord,
    pub word_b: GroupWord,
    /// Repetition counts from the period matching.
    pub p: u64,
    pub q: u64,
    /// Periods of `word_a^p` and `word_b^q`.
    pub ell_a: f64,
    pub ell_b: f64,
    pub eps: f64,
    /// `‖galois_rep(word_b^q)‖ / ‖galois_rep(word_a^p)‖`.
    pub ratio: f64,
    pub schottky_n: u32,
    pub m0: u32,
    pub n0: u32,
}

const DIRICHLET_Q_MAX: u64 = 1_000_000;
const M0_MAX: u32 = 200;

/// Natural log of the spectral norm of `m^k`, by repeated squaring with
/// separate log scales so large powers do not overflow.
fn power_log_norm(m: &RealMat, k: u64) -> f64 {
    let mut acc = RealMat::identity();
    let mut acc_log = 0.0;
    let mut base = m.clone();
    let mut base_log = 0.0;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
            acc_log += base_log;
            let s = acc.frobenius();
            acc = acc.scale(&(1.0 / s));
            acc_log += s.ln();
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
            base_log *= 2.0;
            let s = base.frobenius();
            base = base.scale(&(1.0 / s));
            base_log += s.ln();
        }
    }
    acc.norm().ln() + acc_log
}

/// Builds `word_b = τ₁^{n₀N}` and `word_a = τ₂^{m₀N}τ₁^{n₀N}` with repetition
/// counts `p, q` so that `|pℓ_a − qℓ_b| < 1` and the balanced norm of
/// `word_b^q` is at most `eps` times that of `word_a^p`.
pub fn pseudo_anosov_pair(eps: f64) -> Result<PseudoAnosovPair> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let n_pow = schottky_power(20)?;
    let n0 = 1;
    let word_b = tau1().pow(n0 * n_pow);
    let mb = eval_word(&word_b);
    let ell_b1 = period(&mb);
    let num_b = mb.galois().embed(Embedding::Phi1);
    let mut best = f64::INFINITY;
    for m0 in 1..=M0_MAX {
        let word_a = tau2().pow(m0 * n_pow).concat(&word_b);
        let ma = eval_word(&word_a);
        let ell_a1 = period(&ma);
        let num_a = ma.galois().embed(Embedding::Phi1);
        let (p, q) = dirichlet_match(ell_a1, ell_b1)?;
        let ratio = (power_log_norm(&num_b, q) - power_log_norm(&num_a, p)).exp();
        best = best.min(ratio);
        if ratio <= eps {
            return Ok(PseudoAnosovPair {
                word_a,
                word_b,
                p,
                q,
                ell_a: p as f64 * ell_a1,
                ell_b: q as f64 * ell_b1,
                eps,
                ratio,
                schottky_n: n_pow,
                m0,
                n0,
            });
        }
    }
    Err(Error::SearchFailed(format!(
        "eps = {eps} not reached; best ratio {best:.3e}"
    )))
}

/// Smallest `p ≥ 1` with some `q ≤ 10⁶` such that `|p·a − q·b| < 1`.
fn dirichlet_match(a: f64, b: f64) -> Result<(u64, u64)> {
    for p in 1..=DIRICHLET_Q_MAX {
        let x = p as f64 * a;
        let q = (x / b).round().max(1.0);
        if q as u64 > DIRICHLET_Q_MAX {
            break;
        }
        if (x - q * b).abs() < 1.0 {
            return Ok((p, q as u64));
        }
    }
    Err(Error::SearchFailed("no Dirichlet match with q ≤ 10⁶".into()))
}

/// Side vectors of the regular octagon with a horizontal unit side.
pub fn octagon_sides() -> [[QSqrt2; 2]; 4] {
    let h = QSqrt2::half_sqrt2();
    let z = QSqrt2::zero;
    let one = QSqrt2::one;
    [
        [one(), z()],
        [h.clone(), h.clone()],
        [z(), one()],
        [-h.clone(), h],
    ]
}

/// Cohomology of the octagon surface in the basis dual to the four side
/// classes, with its cup-product pairing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairingData {
    pub homology_basis: [String; 4],
    /// `⟨θ, η⟩ = θ·J·ηᵀ` on coordinate vectors of covectors.
    pub intersection_matrix: [[i64; 4]; 4],
    pub taut_basis: [[QSqrt2; 4]; 2],
    pub bal_basis: [[QSqrt2; 4]; 2],
    pub area: QSqrt2,
}

/// Integer pairing matrix read off the boundary word
/// `e₁e₂e₃e₄e₁⁻¹e₂⁻¹e₃⁻¹e₄⁻¹` of the octagon: integrating a primitive of θ
/// against η around the boundary.
fn boundary_pairing(th: &[i64; 4], et: &[i64; 4]) -> i64 {
    let side = |v: &[i64; 4], k: usize| if k < 4 { v[k] } else { -v[k - 4] };
    // Twice the trapezoid sum keeps everything integral.
    let mut f = 0;
    let mut twice = 0;
    for k in 0..8 {
        twice += side(et, k) * (2 * f + side(th, k));
        f += side(th, k);
    }
    twice / 2
}

impl PairingData {
    pub fn pair(&self, th: &[QSqrt2; 4], et: &[QSqrt2; 4]) -> QSqrt2 {
        let mut acc = QSqrt2::zero();
        for i in 0..4 {
            for j in 0..4 {
                let jij = self.intersection_matrix[i][j];
                if jij != 0 {
                    acc = &acc + &(&(&th[i] * &et[j]) * &QSqrt2::from(jij));
                }
            }
        }
        acc
    }
}

fn pfaffian(j: &[[i64; 4]; 4]) -> i64 {
    j[0][1] * j[2][3] - j[0][2] * j[1][3] + j[0][3] * j[1][2]
}

/// Octagon area `2 + 2√2` by the shoelace formula on the polygon.
pub fn octagon_area() -> QSqrt2 {
    let sides = octagon_sides();
    let mut verts = vec![[QSqrt2::zero(), QSqrt2::zero()]];
    for k in 0..8 {
        let v = if k < 4 {
            sides[k].clone()
        } else {
            [-sides[k - 4][0].clone(), -sides[k - 4][1].clone()]
        };
        let last = verts.last().unwrap().clone();
        verts.push([&last[0] + &v[0], &last[1] + &v[1]]);
    }
    let mut twice = QSqrt2::zero();
    for k in 0..8 {
        let (p, n) = (&verts[k], &verts[k + 1]);
        twice = &twice + &(&(&p[0] * &n[1]) - &(&n[0] * &p[1]));
    }
    &twice * &QSqrt2::from_parts(1, 2, 0, 1)
}

pub fn symplectic_check() -> Result<PairingData> {
    let mut jm = [[0i64; 4]; 4];
    for (i, row) in jm.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let mut a = [0; 4];
            let mut b = [0; 4];
            a[i] = 1;
            b[j] = 1;
            *e = boundary_pairing(&a, &b);
        }
    }
    for i in 0..4 {
        for j in 0..4 {
            if jm[i][j] != -jm[j][i] {
                return Err(Error::Verification("pairing matrix not antisymmetric".into()));
            }
        }
    }
    if pfaffian(&jm) == 0 {
        return Err(Error::Verification("pairing matrix degenerate".into()));
    }
    let sides = octagon_sides();
    let dx: [QSqrt2; 4] = std::array::from_fn(|i| sides[i][0].clone());
    let dy: [QSqrt2; 4] = std::array::from_fn(|i| sides[i][1].clone());
    let gdx = dx.clone().map(|x| x.galois());
    let gdy = dy.clone().map(|x| x.galois());
    let data = PairingData {
        homology_basis: ["e1", "e2", "e3", "e4"].map(String::from),
        intersection_matrix: jm,
        taut_basis: [dx, dy],
        bal_basis: [gdx, gdy],
        area: octagon_area(),
    };
    for t in &data.taut_basis {
        for b in &data.bal_basis {
            if !data.pair(t, b).is_zero() {
                return Err(Error::Verification(
                    "tautological and balanced covectors not orthogonal".into(),
                ));
            }
        }
    }
    if data.pair(&data.taut_basis[0], &data.taut_basis[1]) != data.area {
        return Err(Error::Verification("⟨dx, dy⟩ differs from the area".into()));
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> QSqrt2 {
        QSqrt2::int(a, b)
    }

    #[test]
    fn generator_facts() {
        assert_eq!(Gen::Gamma.matrix().det(), q(-1, 0));
        assert_eq!(Gen::Gamma.matrix().pow(2), ExactMat::identity());
        assert_eq!(Gen::Rho.matrix().pow(8), ExactMat::identity());
        assert_eq!(Gen::Rho.matrix().pow(4), ExactMat::identity().scale(&q(-1, 0)));
        for g in Gen::ALL {
            assert_eq!(g.matrix().pow(g.order() as u32), ExactMat::identity());
        }
    }

    #[test]
    fn tau_traces() {
        assert_eq!(eval_word(&tau1()).trace(), q(2, 2));
        let gn4 = GroupWord::from_letters([(Gen::Gamma, 1), (Gen::Nu4, 1)]);
        assert_eq!(eval_word(&gn4).det(), q(-1, 0));
        // (γν₄)² = [[c²+1, c], [c, 1]] with c = 2+2√2.
        let c = q(2, 2);
        let expect = Mat2::new(&(&c * &c) + &q(1, 0), c.clone(), c, q(1, 0));
        assert_eq!(eval_word(&tau2()), expect);
        assert_eq!(eval_word(&tau2()).trace(), q(14, 8));
    }

    #[test]
    fn translation_word() {
        let t = eval_word(&GroupWord::translation(3));
        assert_eq!(t, Mat2::new(q(1, 0), q(6, 6), q(0, 0), q(1, 0)));
        assert!(GroupWord::translation(2)
            .concat(&GroupWord::translation(-2))
            .is_empty());
    }

    #[test]
    fn empty_word_is_identity() {
        assert_eq!(eval_word(&GroupWord::new()), ExactMat::identity());
    }

    #[test]
    fn galois_classes() {
        assert_eq!(galois_rep(&tau1()).classify(), ConjClass::Elliptic);
        assert_eq!(galois_rep(&tau1()).trace(), q(2, -2));
        assert_eq!(galois_rep(&tau2()).classify(), ConjClass::Hyperbolic);
    }

    #[test]
    fn schottky() {
        let n = schottky_power(20).unwrap();
        assert!(n >= 1);
        let w = tau2().pow(n).concat(&tau1().pow(n));
        assert!(eval_word(&w).trace().embed(Embedding::Phi1) > 2.0);
        assert!(schottky_power(0).is_err());
    }

    #[test]
    fn tau1_period() {
        let p = period(&eval_word(&tau1()));
        assert!((p - (1.0 + 2f64.sqrt()).acosh()).abs() < 1e-14);
    }

    #[test]
    fn pair_half() {
        let pr = pseudo_anosov_pair(0.5).unwrap();
        assert!((pr.ell_a - pr.ell_b).abs() < 1.0);
        assert!(pr.ratio <= 0.5);
        // Independent period check.
        let la = period(&eval_word(&pr.word_a)) * pr.p as f64;
        let lb = period(&eval_word(&pr.word_b)) * pr.q as f64;
        assert!((la - pr.ell_a).abs() < 1e-9 && (lb - pr.ell_b).abs() < 1e-9);
        assert!(pseudo_anosov_pair(1.5).is_err());
    }

    #[test]
    fn numeric_rep_matches_exact() {
        let rep = NumericRep::new();
        let w = tau2().concat(&tau1()).concat(&GroupWord::single(Gen::Rho, 3));
        let exact = galois_rep(&w).embed(Embedding::Phi1);
        assert!(rep.eval(&w).max_abs_diff(&exact) < 1e-10);
    }

    #[test]
    fn symplectic() {
        let d = symplectic_check().unwrap();
        assert_eq!(d.area, q(2, 2));
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d.intersection_matrix[i][j], -d.intersection_matrix[j][i]);
            }
        }
        assert!(d.pair(&d.taut_basis[0], &d.bal_basis[0]).is_zero());
    }

    fn arb_word() -> impl Strategy<Value = GroupWord> {
        prop::collection::vec((0usize..4, 1i32..8), 0..12).prop_map(|v| {
            GroupWord::from_letters(v.into_iter().map(|(g, e)| (Gen::ALL[g], e)))
        })
    }

    proptest! {
        #[test]
        fn word_inverse(w in arb_word()) {
            prop_assert!(w.concat(&w.inverse()).is_empty());
            prop_assert_eq!(&eval_word(&w) * &eval_word(&w.inverse()), ExactMat::identity());
        }

        #[test]
        fn contravariance(w1 in arb_word(), w2 in arb_word()) {
            let lhs = galois_rep(&w1.concat(&w2));
            prop_assert_eq!(lhs, &galois_rep(&w2) * &galois_rep(&w1));
        }

        #[test]
        fn det_is_unit(w in arb_word()) {
            let d = eval_word(&w).det();
            prop_assert!(d == q(1, 0) || d == q(-1, 0));
            prop_assert_eq!(galois_rep(&w).det(), d.galois());
        }
    }
}
