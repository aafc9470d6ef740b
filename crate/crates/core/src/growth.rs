//! Trace growth from a quasi-morphism, and two-sided bounds for the
//! biinvariant word metric whose generators are the elliptic, parabolic and
//! simple-commutator elements.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::euclid::{decompose_primitive, ElementaryFactor, IntVector2, Side};
use crate::mixing::{compose, KickedSystemSpec, MixError};
use crate::sl2core::{
    form_of, is_conjugate_to_inverse, log_abs, positive_form, QuadIrrational, QuadraticForm,
    UnimodularMatrix,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("matrix {0} is not hyperbolic")]
    NotHyperbolic(String),
    #[error("no vector with 5·Q² ≤ Δ found for {0}")]
    SearchExhausted(String),
    #[error("lower-left entry is zero: {0} is triangular")]
    ZeroLowerLeft(String),
    #[error("parameter must be positive: {0}")]
    NonPositive(&'static str),
    #[error(transparent)]
    Mixing(#[from] MixError),
}

/// `ln(2√5)`.
pub fn log_base() -> f64 {
    20f64.sqrt().ln()
}

const CONVERGENT_BUDGET: usize = 10_000;
const BOX_BUDGET: i64 = 200;

/// `conj·f·conj⁻¹` with lower-left entry `c` satisfying `5c² ≤ trace² − 4`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallC {
    pub g: UnimodularMatrix,
    pub conj: UnimodularMatrix,
}

/// Conjugates `f` so that its lower-left entry is a value `Q(y, x)` of the
/// associated form with `5Q² ≤ Δ`. Such a value sits at a convergent of a
/// root of `Q(θ, 1) = 0`, which is where the search looks first.
pub fn reduce_small_c(f: &UnimodularMatrix) -> Result<SmallC, GrowthError> {
    let q = form_of(f).map_err(|_| GrowthError::NotHyperbolic(f.to_string()))?;
    let disc = q.discriminant();
    let good = |v: &BigInt| BigInt::from(5) * v * v <= disc;
    let finish = |x: BigInt, y: BigInt| -> SmallC {
        // conj = (z t; x y) with z·y − t·x = 1
        let e = y.extended_gcd(&x);
        debug_assert!(e.gcd.is_one() || (-&e.gcd).is_one());
        let s: BigInt = if e.gcd.is_one() {
            BigInt::one()
        } else {
            -BigInt::one()
        };
        let (z, t) = (&e.x * &s, -(&e.y * &s));
        let conj = UnimodularMatrix::new(z, t, x, y).expect("determinant one by construction");
        let g = conj.conjugate(f);
        SmallC { g, conj }
    };
    let verify = |r: SmallC| -> SmallC {
        assert!(good(r.g.c()), "post-condition 5c² ≤ Δ failed for {f}");
        r
    };

    // X = y, Y = x in Q(X, Y)
    if good(&q.a) {
        return Ok(verify(finish(BigInt::zero(), BigInt::one())));
    }
    if good(&(-&q.c)) {
        return Ok(verify(finish(BigInt::one(), BigInt::zero())));
    }
    for sign in [1, -1] {
        // θ = (−B ± √Δ)/(2A)
        let theta = QuadIrrational::new(-&q.b, sign, disc.clone(), BigInt::from(2) * &q.a);
        if let Some((xx, yy)) = scan_convergents(&q, &theta, &good) {
            return Ok(verify(finish(yy, xx)));
        }
    }
    for n in 1..=BOX_BUDGET {
        let ring = (-n..=n)
            .flat_map(|xx| (-n..=n).map(move |yy| (xx, yy)))
            .filter(|&(xx, yy)| xx.abs().max(yy.abs()) == n);
        for (xx, yy) in ring {
            {
                let (bx, by) = (BigInt::from(xx), BigInt::from(yy));
                if bx.gcd(&by).is_one() && good(&q.eval(&bx, &by)) {
                    return Ok(verify(finish(by, bx)));
                }
            }
        }
    }
    Err(GrowthError::SearchExhausted(f.to_string()))
}

/// First convergent `X/Y` of `theta` with `good(Q(X, Y))`.
fn scan_convergents(
    q: &QuadraticForm,
    theta: &QuadIrrational,
    good: &dyn Fn(&BigInt) -> bool,
) -> Option<(BigInt, BigInt)> {
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (BigInt::zero(), BigInt::one());
    for (a, _) in theta.partial_quotients().take(CONVERGENT_BUDGET) {
        let p2 = &a * &p0 + &p1;
        let q2 = &a * &q0 + &q1;
        if good(&q.eval(&p2, &q2)) {
            return Some((p2, q2));
        }
        p1 = p0;
        q1 = q0;
        p0 = p2;
        q0 = q2;
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParabolicSplit {
    /// `f·T^k`.
    pub f_prime: UnimodularMatrix,
    #[serde(with = "crate::serde_util")]
    pub k: BigInt,
}

/// `f = f′·T^{−k}` with `T = (1 1; 0 1)` and `trace f′ = trace f + c·k`
/// minimal in absolute value; ties go to the smaller `|k|`.
pub fn split_parabolic(f: &UnimodularMatrix) -> Result<ParabolicSplit, GrowthError> {
    let c = f.c();
    if c.is_zero() {
        return Err(GrowthError::ZeroLowerLeft(f.to_string()));
    }
    let t = f.trace();
    let k0 = (-&t).div_floor(c);
    let k = [k0.clone(), k0 + 1]
        .into_iter()
        .min_by(|x, y| {
            (&t + c * x)
                .abs()
                .cmp(&(&t + c * y).abs())
                .then(x.abs().cmp(&y.abs()))
        })
        .unwrap();
    let f_prime = f * &UnimodularMatrix::upper(k.clone());
    debug_assert_eq!(f_prime.trace(), &t + c * &k);
    debug_assert_eq!(&f_prime * &UnimodularMatrix::upper(-&k), *f);
    Ok(ParabolicSplit { f_prime, k })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub log_lhs: f64,
    pub log_rhs: f64,
    pub holds: bool,
}

/// `|trace f| ≥ (2√5)^{|r(f)|/‖dr‖}`, compared in log space.
pub fn trace_bound_check(
    f: &UnimodularMatrix,
    r_of_f: f64,
    dr_norm: f64,
) -> Result<TraceBoundCheck, GrowthError> {
    if !f.is_hyperbolic() {
        return Err(GrowthError::NotHyperbolic(f.to_string()));
    }
    if !(dr_norm > 0.0) {
        return Err(GrowthError::NonPositive("dr_norm"));
    }
    let log_lhs = log_abs(&f.trace());
    let log_rhs = r_of_f.abs() / dr_norm * log_base();
    Ok(TraceBoundCheck {
        lhs: log_lhs.exp(),
        rhs: log_rhs.exp(),
        log_lhs,
        log_rhs,
        holds: log_lhs >= log_rhs,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateStep {
    pub input: UnimodularMatrix,
    #[serde(with = "crate::serde_util")]
    pub trace: BigInt,
    pub conj: UnimodularMatrix,
    pub reduced: UnimodularMatrix,
    #[serde(with = "crate::serde_util")]
    pub k: BigInt,
    pub f_prime: UnimodularMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCertificate {
    pub steps: Vec<CertificateStep>,
    pub depth: usize,
    pub last: UnimodularMatrix,
    #[serde(with = "crate::serde_util")]
    pub last_trace: BigInt,
}

impl TraceCertificate {
    /// Replays every step exactly: conjugation, the splitting identity, and
    /// the inequalities `5c² ≤ tr²`, `4tr′² ≤ c²`, `20tr′² ≤ tr²`.
    pub fn verify(&self) -> bool {
        let mut cur: Option<&UnimodularMatrix> = None;
        for s in &self.steps {
            if cur.is_some_and(|c| *c != s.input) || s.trace != s.input.trace() {
                return false;
            }
            let t2 = &s.trace * &s.trace;
            let c2 = s.reduced.c() * s.reduced.c();
            let tp = s.f_prime.trace();
            let tp2 = &tp * &tp;
            let ok = s.conj.conjugate(&s.input) == s.reduced
                && &s.f_prime * &UnimodularMatrix::upper(-&s.k) == s.reduced
                && BigInt::from(5) * &c2 <= t2
                && BigInt::from(4) * &tp2 <= c2
                && BigInt::from(20) * &tp2 <= t2;
            if !ok {
                return false;
            }
            cur = Some(&s.f_prime);
        }
        let end = cur.is_none_or(|c| *c == self.last);
        end && self.last_trace.abs() <= BigInt::from(2) && self.depth == self.steps.len()
    }

    /// `(2√5)^{depth − 1} ≤ |trace|`, i.e. `20^{depth−1} ≤ trace²`.
    pub fn depth_within_log_bound(&self) -> bool {
        match self.steps.first() {
            None => true,
            Some(s) => BigInt::from(20).pow(self.depth as u32 - 1) <= &s.trace * &s.trace,
        }
    }
}

/// Alternates [`reduce_small_c`] and [`split_parabolic`] until `|trace| ≤ 2`.
pub fn trace_certificate(f: &UnimodularMatrix) -> Result<TraceCertificate, GrowthError> {
    if !f.is_hyperbolic() {
        return Err(GrowthError::NotHyperbolic(f.to_string()));
    }
    let mut steps = Vec::new();
    let mut cur = f.clone();
    while cur.trace().abs() > BigInt::from(2) {
        let sc = reduce_small_c(&cur)?;
        let sp = split_parabolic(&sc.g)?;
        steps.push(CertificateStep {
            input: cur.clone(),
            trace: cur.trace(),
            conj: sc.conj,
            reduced: sc.g,
            k: sp.k,
            f_prime: sp.f_prime.clone(),
        });
        cur = sp.f_prime;
    }
    let cert = TraceCertificate {
        depth: steps.len(),
        steps,
        last_trace: cur.trace(),
        last: cur,
    };
    assert!(cert.verify(), "certificate failed its own replay for {f}");
    Ok(cert)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorKind {
    Elliptic,
    Parabolic,
    Commutator,
}

/// One generator of the metric: a single elliptic or parabolic matrix, or
/// the commutator `a·b·a⁻¹·b⁻¹` of its two matrices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFactor {
    pub kind: FactorKind,
    pub matrices: Vec<UnimodularMatrix>,
}

impl WitnessFactor {
    pub fn value(&self) -> UnimodularMatrix {
        match self.kind {
            FactorKind::Commutator => {
                UnimodularMatrix::commutator(&self.matrices[0], &self.matrices[1])
            }
            _ => self.matrices[0].clone(),
        }
    }

    pub fn tag_holds(&self) -> bool {
        match self.kind {
            FactorKind::Elliptic => {
                self.matrices.len() == 1 && self.matrices[0].trace().abs() < BigInt::from(2)
            }
            FactorKind::Parabolic => {
                self.matrices.len() == 1
                    && self.matrices[0].trace().abs() == BigInt::from(2)
                    && !self.matrices[0].is_central()
            }
            FactorKind::Commutator => self.matrices.len() == 2,
        }
    }

    fn conjugated(&self, by: &UnimodularMatrix) -> WitnessFactor {
        WitnessFactor {
            kind: self.kind,
            matrices: self.matrices.iter().map(|m| by.conjugate(m)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoUpper {
    pub upper: usize,
    pub witness: Vec<WitnessFactor>,
}

impl RhoUpper {
    /// Tags hold and the ordered product of the factors is `g`.
    pub fn verify(&self, g: &UnimodularMatrix) -> bool {
        let prod = self
            .witness
            .iter()
            .fold(UnimodularMatrix::identity(), |acc, w| &acc * &w.value());
        self.upper == self.witness.len()
            && self.witness.iter().all(WitnessFactor::tag_holds)
            && prod == *g
    }
}

fn single(kind: FactorKind, m: UnimodularMatrix) -> WitnessFactor {
    WitnessFactor {
        kind,
        matrices: vec![m],
    }
}

/// A valid presentation of `g`, not necessarily shortest.
///
/// Candidates: `g` itself when it is a generator; `T^x·W` where `W` is the
/// elementary word carrying `(0,1)` to the bottom row of `g`; and, for
/// `g = x^{2k}` with `w·x·w⁻¹ = x⁻¹`, the single commutator `[x^k, w]`.
pub fn rho_upper(g: &UnimodularMatrix) -> RhoUpper {
    let best = |a: RhoUpper, b: RhoUpper| if b.upper < a.upper { b } else { a };
    let two = BigInt::from(2);
    let tr = g.trace().abs();
    if g.is_identity() {
        return RhoUpper {
            upper: 0,
            witness: vec![],
        };
    }
    if g.is_central() {
        let s = UnimodularMatrix::s();
        return RhoUpper {
            upper: 2,
            witness: vec![
                single(FactorKind::Elliptic, s.clone()),
                single(FactorKind::Elliptic, s),
            ],
        };
    }
    if tr < two {
        return RhoUpper {
            upper: 1,
            witness: vec![single(FactorKind::Elliptic, g.clone())],
        };
    }
    if tr == two {
        return RhoUpper {
            upper: 1,
            witness: vec![single(FactorKind::Parabolic, g.clone())],
        };
    }
    let mut out = euclid_presentation(g);
    if let Some(c) = commutator_presentation(g) {
        out = best(out, c);
    }
    debug_assert!(out.verify(g));
    out
}

fn euclid_presentation(g: &UnimodularMatrix) -> RhoUpper {
    let row = IntVector2::new(g.c().clone(), g.d().clone());
    let word = decompose_primitive(&row).expect("bottom row of a unimodular matrix is primitive");
    // g·W⁻¹ fixes (0,1), so it is (1 x; 0 1)
    let rest = g * &word.matrix().inverse();
    debug_assert!(rest.c().is_zero() && rest.a().is_one());
    let mut factors: Vec<ElementaryFactor> = Vec::new();
    let lead = ElementaryFactor::new(Side::Upper, rest.b().clone());
    for f in std::iter::once(lead).chain(word.0) {
        if f.k.is_zero() {
            continue;
        }
        match factors.last_mut() {
            Some(last) if last.side == f.side => {
                last.k += &f.k;
                if last.k.is_zero() {
                    factors.pop();
                }
            }
            _ => factors.push(f),
        }
    }
    let witness: Vec<WitnessFactor> = factors
        .iter()
        .map(|f| single(FactorKind::Parabolic, f.matrix()))
        .collect();
    RhoUpper {
        upper: witness.len(),
        witness,
    }
}

fn commutator_presentation(g: &UnimodularMatrix) -> Option<RhoUpper> {
    if !g.is_hyperbolic() || g.trace().is_negative() {
        return None;
    }
    let pf = positive_form(g).ok()?;
    let (root, power) = pf.word.primitive_root();
    if power % 2 != 0 {
        return None;
    }
    let x = pf.conj.conjugate(&root.matrix());
    let verdict = is_conjugate_to_inverse(&x).ok()?;
    let w = verdict.witness?;
    let xk = x.pow((power / 2) as i64);
    let c = WitnessFactor {
        kind: FactorKind::Commutator,
        matrices: vec![xk, w],
    };
    (c.value() == *g).then(|| RhoUpper {
        upper: 1,
        witness: vec![c],
    })
}

/// `|r(g)|/(lip·‖dr‖)`.
pub fn rho_lower(r_of_g: f64, dr_norm: f64, lip_const: f64) -> Result<f64, GrowthError> {
    if !(dr_norm > 0.0) {
        return Err(GrowthError::NonPositive("dr_norm"));
    }
    if !(lip_const > 0.0) {
        return Err(GrowthError::NonPositive("lip_const"));
    }
    Ok(r_of_g.abs() / (lip_const * dr_norm))
}

pub const DEFAULT_LIP_CONST: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoBar {
    pub bound: usize,
    /// Bound for `ρ(h^{nt}, f⁽ⁿ⁾)` at each `n`.
    pub per_n: Vec<usize>,
}

/// Bounds `sup_n ρ(h^{nt}, f⁽ⁿ⁾)` through `h^{−nt}·f⁽ⁿ⁾ = K_n⋯K_1` with
/// `K_j = h^{−jt}·φ_j·h^{jt}`, each `K_j` presented by conjugating the
/// presentation of `φ_j`. The direct presentation of `h^{−nt}·f⁽ⁿ⁾` is used
/// when shorter.
pub fn rho_bar_kick_distance(spec: &KickedSystemSpec, n_max: usize) -> Result<RhoBar, GrowthError> {
    let sys = compose(spec, n_max)?;
    let ht = spec.h.pow(spec.t as i64);
    let ht_inv = ht.inverse();
    let mut per_n = Vec::with_capacity(n_max);
    let mut conj = UnimodularMatrix::identity(); // h^{−jt}
    let mut prod = UnimodularMatrix::identity(); // K_j⋯K_1
    let mut summed = 0usize;
    let mut back = UnimodularMatrix::identity(); // h^{−nt}
    for n in 1..=n_max {
        conj = &conj * &ht_inv;
        back = &back * &ht_inv;
        let phi = sys.kick(n);
        let pres = rho_upper(phi);
        let k_n = conj.conjugate(phi);
        debug_assert!({
            let w: Vec<WitnessFactor> = pres.witness.iter().map(|w| w.conjugated(&conj)).collect();
            RhoUpper {
                upper: w.len(),
                witness: w,
            }
            .verify(&k_n)
        });
        summed += pres.upper;
        prod = &k_n * &prod;
        let target = &back * sys.get(n);
        assert_eq!(prod, target, "conjugated-kick identity failed at n = {n}");
        let direct = rho_upper(&target).upper;
        per_n.push(summed.min(direct));
    }
    let bound = per_n.iter().copied().max().unwrap_or(0);
    Ok(RhoBar { bound, per_n })
}

/// `ln|trace|/n` for each materialized `f⁽ⁿ⁾`.
pub fn trace_lyapunov(spec: &KickedSystemSpec, n_max: usize) -> Result<Vec<f64>, GrowthError> {
    let sys = compose(spec, n_max)?;
    Ok(sys
        .iter()
        .map(|(n, f)| log_abs(&f.trace()) / n as f64)
        .collect())
}
