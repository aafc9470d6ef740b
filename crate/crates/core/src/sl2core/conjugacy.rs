use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::quadratic::{attracting_fixed_point, form_of, is_perfect_square};
use super::{Sl2Error, UnimodularMatrix};

/// Letters of the free monoid generated by `L = (1 0; 1 1)` and `R = (1 1; 0 1)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Lr {
    L,
    R,
}

impl Lr {
    pub fn matrix(self) -> UnimodularMatrix {
        match self {
            Lr::L => UnimodularMatrix::lower(1),
            Lr::R => UnimodularMatrix::upper(1),
        }
    }

    pub fn swap(self) -> Lr {
        match self {
            Lr::L => Lr::R,
            Lr::R => Lr::L,
        }
    }
}

/// A positive word in `L`, `R`. Hyperbolic conjugacy classes of positive
/// trace correspond to such words up to rotation; the rotations are the
/// reduced representatives of the class (one per reduced form in the cycle).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct LrWord(pub Vec<Lr>);

impl LrWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn matrix(&self) -> UnimodularMatrix {
        self.0
            .iter()
            .fold(UnimodularMatrix::identity(), |acc, l| &acc * &l.matrix())
    }

    /// Word of a matrix with nonnegative entries; `None` if some entry is negative.
    pub fn of_nonnegative(m: &UnimodularMatrix) -> Option<LrWord> {
        if !m.is_nonnegative() {
            return None;
        }
        let (mut a, mut b, mut c, mut d) =
            (m.a().clone(), m.b().clone(), m.c().clone(), m.d().clone());
        let mut out = Vec::new();
        while !(a.is_one() && d.is_one() && b.is_zero() && c.is_zero()) {
            if a >= c && b >= d {
                a -= &c;
                b -= &d;
                out.push(Lr::R);
            } else if c >= a && d >= b {
                c -= &a;
                d -= &b;
                out.push(Lr::L);
            } else {
                return None;
            }
        }
        Some(LrWord(out))
    }

    /// `self` rotated left by `k`: `w[k..] ++ w[..k]`.
    pub fn rotate(&self, k: usize) -> LrWord {
        let n = self.0.len();
        if n == 0 {
            return self.clone();
        }
        let k = k % n;
        let mut v = self.0[k..].to_vec();
        v.extend_from_slice(&self.0[..k]);
        LrWord(v)
    }

    /// Smallest `k` with `self.rotate(k) == other`.
    pub fn rotation_to(&self, other: &LrWord) -> Option<usize> {
        if self.len() != other.len() {
            return None;
        }
        if self.is_empty() {
            return Some(0);
        }
        (0..self.len())
            .find(|&k| (0..self.len()).all(|i| self.0[(i + k) % self.len()] == other.0[i]))
    }

    /// Reversed word with `L ↔ R`: the word of the transpose.
    pub fn reverse_swap(&self) -> LrWord {
        LrWord(self.0.iter().rev().map(|l| l.swap()).collect())
    }

    /// `(root, k)` with `self = root^k` and `root` primitive.
    pub fn primitive_root(&self) -> (LrWord, usize) {
        let n = self.len();
        for p in 1..=n {
            if n.is_multiple_of(p) && (p..n).all(|i| self.0[i] == self.0[i - p]) {
                return (LrWord(self.0[..p].to_vec()), n / p);
            }
        }
        (self.clone(), 1)
    }

    pub fn count(&self, letter: Lr) -> usize {
        self.0.iter().filter(|&&l| l == letter).count()
    }
}

impl fmt::Display for LrWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // run-length form, e.g. "L R L^3 R^2"
        let mut i = 0;
        let mut first = true;
        while i < self.0.len() {
            let l = self.0[i];
            let mut j = i;
            while j < self.0.len() && self.0[j] == l {
                j += 1;
            }
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let s = if l == Lr::L { "L" } else { "R" };
            if j - i == 1 {
                f.write_str(s)?;
            } else {
                write!(f, "{s}^{}", j - i)?;
            }
            i = j;
        }
        Ok(())
    }
}

/// A hyperbolic matrix brought to positive form by conjugation:
/// `conj⁻¹ · m · conj = sign · word.matrix()`.
#[derive(Clone, Debug)]
pub struct PositiveForm {
    pub conj: UnimodularMatrix,
    pub sign: i32,
    pub word: LrWord,
}

const MAX_CF_STEPS: usize = 1_000_000;

/// Conjugates hyperbolic `m` to `±(nonnegative matrix)` by following the
/// continued fraction of its attracting fixed point until the complete
/// quotient is reduced.
pub fn positive_form(m: &UnimodularMatrix) -> Result<PositiveForm, Sl2Error> {
    if !m.is_hyperbolic() {
        return Err(Sl2Error::NotHyperbolic(m.to_string()));
    }
    let sign = if m.trace().is_positive() { 1 } else { -1 };
    let n = if sign > 0 { m.clone() } else { m.neg() };
    if let Some(word) = LrWord::of_nonnegative(&n) {
        return Ok(PositiveForm {
            conj: UnimodularMatrix::identity(),
            sign,
            word,
        });
    }

    // conj accumulates Π (a_k 1; 1 0); only even prefixes have determinant 1.
    let (mut c00, mut c01, mut c10, mut c11) =
        (BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one());
    let x0 = attracting_fixed_point(&n);
    for (k, (a, x)) in x0.partial_quotients().enumerate().take(MAX_CF_STEPS) {
        if k % 2 == 0 && x.is_reduced() {
            let conj = UnimodularMatrix::from_parts_unchecked(c00, c01, c10, c11);
            let reduced = &(&conj.inverse() * &n) * &conj;
            let word = LrWord::of_nonnegative(&reduced)
                .expect("reduced fixed points give a nonnegative conjugate");
            return Ok(PositiveForm { conj, sign, word });
        }
        // (c00 c01; c10 c11)·(a 1; 1 0)
        let n00 = &c00 * &a + &c01;
        let n10 = &c10 * &a + &c11;
        c01 = c00;
        c11 = c10;
        c00 = n00;
        c10 = n10;
    }
    unreachable!("continued fraction of a quadratic irrational is eventually periodic")
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ConjInverseMethod {
    /// Comparison of the cycles of reduced representatives of `m` and `m⁻¹`.
    FormCycle,
    SymmetricShortcut,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjInverseVerdict {
    pub answer: bool,
    pub witness: Option<UnimodularMatrix>,
    pub method: ConjInverseMethod,
}

/// Decides whether hyperbolic `m` is conjugate to `m⁻¹` in SL(2,Z).
///
/// A positive verdict always carries a witness `g` with `g·m·g⁻¹ = m⁻¹`,
/// checked by exact multiplication before returning.
pub fn is_conjugate_to_inverse(m: &UnimodularMatrix) -> Result<ConjInverseVerdict, Sl2Error> {
    if !m.is_hyperbolic() {
        return Err(Sl2Error::NotHyperbolic(m.to_string()));
    }
    let inv = m.inverse();
    if m.is_symmetric() {
        let g = UnimodularMatrix::quarter_turn();
        assert_eq!(
            g.conjugate(m),
            inv,
            "quarter turn must invert a symmetric matrix"
        );
        return Ok(ConjInverseVerdict {
            answer: true,
            witness: Some(g),
            method: ConjInverseMethod::SymmetricShortcut,
        });
    }
    let p1 = positive_form(m)?;
    let p2 = positive_form(&inv)?;
    debug_assert_eq!(p1.sign, p2.sign);
    let verdict = match p1.word.rotation_to(&p2.word) {
        None => ConjInverseVerdict {
            answer: false,
            witness: None,
            method: ConjInverseMethod::FormCycle,
        },
        Some(k) => {
            let prefix = LrWord(p1.word.0[..k].to_vec()).matrix();
            let g = &(&p2.conj * &prefix.inverse()) * &p1.conj.inverse();
            assert_eq!(
                g.conjugate(m),
                inv,
                "reconstructed witness failed verification"
            );
            ConjInverseVerdict {
                answer: true,
                witness: Some(g),
                method: ConjInverseMethod::FormCycle,
            }
        }
    };
    Ok(verdict)
}

/// Cheap, one-sided test on the discriminant `trace² − 4`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum PrimeVerdict {
    /// Some prime `p ≡ 3 (mod 4)` divides the discriminant to an odd power.
    NotConjugate {
        #[serde(with = "crate::serde_util")]
        prime: BigInt,
        exponent: u32,
    },
    Inconclusive,
}

pub const DEFAULT_TRIAL_BOUND: u64 = 1_000_000;

/// Prime factorisation by trial division with divisors `≤ bound`.
pub fn factor_trial(n: &BigInt, bound: u64) -> Result<Vec<(BigInt, u32)>, Sl2Error> {
    let mut n = n.abs();
    let mut out = Vec::new();
    if n.is_zero() {
        return Ok(out);
    }
    let mut p: u64 = 2;
    while p <= bound {
        let pb = BigInt::from(p);
        if &pb * &pb > n {
            break;
        }
        let mut e = 0;
        while n.is_multiple_of(&pb) {
            n /= &pb;
            e += 1;
        }
        if e > 0 {
            out.push((pb, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if !n.is_one() {
        let pb = BigInt::from(p);
        if &pb * &pb > n {
            out.push((n, 1));
        } else {
            return Err(Sl2Error::FactorizationTimeout { bound });
        }
    }
    Ok(out)
}

pub fn prime_criterion(m: &UnimodularMatrix, bound: u64) -> Result<PrimeVerdict, Sl2Error> {
    let q = form_of(m)?;
    let disc = q.discriminant();
    debug_assert!(!is_perfect_square(&disc));
    let three = BigInt::from(3);
    let four = BigInt::from(4);
    for (p, e) in factor_trial(&disc, bound)? {
        if e % 2 == 1 && p.mod_floor(&four) == three {
            return Ok(PrimeVerdict::NotConjugate {
                prime: p,
                exponent: e,
            });
        }
    }
    Ok(PrimeVerdict::Inconclusive)
}

/// Length of the positive word, a rough complexity measure for a class.
pub fn word_length(m: &UnimodularMatrix) -> Result<usize, Sl2Error> {
    Ok(positive_form(m)?.word.len())
}

/// Log of the leading eigenvalue, `log λ` with `λ + 1/λ = |trace|`.
pub fn log_eigenvalue(m: &UnimodularMatrix) -> f64 {
    let t = m.trace().abs().to_f64().unwrap_or(f64::INFINITY);
    if t.is_finite() {
        ((t + (t * t - 4.0).max(0.0).sqrt()) / 2.0).ln()
    } else {
        // |t| ≈ λ once t is astronomically large
        crate::sl2core::log_abs(&m.trace())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: i64, b: i64, c: i64, d: i64) -> UnimodularMatrix {
        UnimodularMatrix::from_i64(a, b, c, d).unwrap()
    }

    #[test]
    fn nonnegative_words() {
        let w = LrWord::of_nonnegative(&m(4, 9, 7, 16)).unwrap();
        assert_eq!(w.to_string(), "L R L^3 R^2");
        assert_eq!(w.matrix(), m(4, 9, 7, 16));
        let w = LrWord::of_nonnegative(&m(5, 3, 3, 2)).unwrap();
        assert_eq!(w.primitive_root(), (LrWord(vec![Lr::R, Lr::L]), 2));
        assert!(LrWord::of_nonnegative(&m(2, -1, 1, 0)).is_none());
    }

    #[test]
    fn reverse_swap_is_transpose() {
        let w = LrWord(vec![Lr::L, Lr::R, Lr::L, Lr::L, Lr::R]);
        assert_eq!(w.reverse_swap().matrix(), w.matrix().transpose());
    }

    #[test]
    fn positive_form_conjugates() {
        for h in [
            m(4, 9, 7, 16),
            m(3, -1, 1, 0),
            m(-3, 1, -1, 0),
            m(9, -7, 4, -3),
            m(1, 1, 5, 6),
            m(-11, 40, 3, -11),
        ] {
            let pf = positive_form(&h).unwrap();
            let back = &(&pf.conj.inverse() * &h) * &pf.conj;
            let target = if pf.sign > 0 {
                pf.word.matrix()
            } else {
                pf.word.matrix().neg()
            };
            assert_eq!(back, target, "{h}");
        }
    }

    #[test]
    fn conj_inverse_examples() {
        let v = is_conjugate_to_inverse(&m(2, 1, 1, 1)).unwrap();
        assert!(v.answer);
        assert_eq!(v.witness, Some(m(0, 1, -1, 0)));
        assert_eq!(v.method, ConjInverseMethod::SymmetricShortcut);

        let v = is_conjugate_to_inverse(&m(4, 9, 7, 16)).unwrap();
        assert!(!v.answer);
        assert!(v.witness.is_none());

        let v = is_conjugate_to_inverse(&m(5, 2, 2, 1)).unwrap();
        assert!(v.answer);
        assert_eq!(v.witness, Some(m(0, 1, -1, 0)));

        assert!(is_conjugate_to_inverse(&m(1, 1, 0, 1)).is_err());
    }

    #[test]
    fn nonsymmetric_but_conjugate() {
        // conjugates of symmetric matrices are conjugate to their inverses
        let s = m(2, 1, 1, 1);
        let g = m(3, 2, 1, 1);
        let h = g.conjugate(&s);
        assert!(!h.is_symmetric());
        let v = is_conjugate_to_inverse(&h).unwrap();
        assert!(v.answer);
        assert_eq!(v.method, ConjInverseMethod::FormCycle);
        assert_eq!(v.witness.unwrap().conjugate(&h), h.inverse());
    }

    #[test]
    fn prime_criterion_examples() {
        // trace 20: 396 = 2^2 3^2 11
        let v = prime_criterion(&m(4, 9, 7, 16), DEFAULT_TRIAL_BOUND).unwrap();
        assert_eq!(
            v,
            PrimeVerdict::NotConjugate {
                prime: BigInt::from(11),
                exponent: 1
            }
        );
        // trace 3: 5
        assert_eq!(
            prime_criterion(&m(2, 1, 1, 1), DEFAULT_TRIAL_BOUND).unwrap(),
            PrimeVerdict::Inconclusive
        );
        // trace 4: 12 = 2^2 3
        let v = prime_criterion(&m(4, -1, 1, 0), DEFAULT_TRIAL_BOUND).unwrap();
        assert_eq!(
            v,
            PrimeVerdict::NotConjugate {
                prime: BigInt::from(3),
                exponent: 1
            }
        );
    }

    #[test]
    fn factorization_timeout() {
        // 1000003 * 1000033, both beyond a bound of 1000
        let n = BigInt::from(1_000_003u64) * BigInt::from(1_000_033u64);
        assert!(matches!(
            factor_trial(&n, 1000),
            Err(Sl2Error::FactorizationTimeout { bound: 1000 })
        ));
        let f = factor_trial(&BigInt::from(396), 1000).unwrap();
        assert_eq!(
            f,
            vec![
                (BigInt::from(2), 2),
                (BigInt::from(3), 2),
                (BigInt::from(11), 1)
            ]
        );
        // a prime cofactor just above the bound is accepted
        let f = factor_trial(&BigInt::from(2 * 1009), 1000).unwrap();
        assert_eq!(f, vec![(BigInt::from(2), 1), (BigInt::from(1009), 1)]);
    }
}
