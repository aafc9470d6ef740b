use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Sl2Error;

/// A 2×2 integer matrix of determinant one, stored row-major as
///
/// ```text
/// ( a  b )
/// ( c  d )
/// ```
///
/// Integer row vectors act on the left, `v ↦ v·M`; the upper half-plane
/// is acted on by the usual Möbius map `z ↦ (az + b)/(cz + d)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct UnimodularMatrix {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

/// Conjugacy-type of an element, determined by `|trace|`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum ElementClass {
    Identity,
    MinusIdentity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl fmt::Display for ElementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ElementClass::Identity => "Identity",
            ElementClass::MinusIdentity => "MinusIdentity",
            ElementClass::Elliptic => "Elliptic",
            ElementClass::Parabolic => "Parabolic",
            ElementClass::Hyperbolic => "Hyperbolic",
        };
        f.write_str(s)
    }
}

impl UnimodularMatrix {
    pub fn new(
        a: impl Into<BigInt>,
        b: impl Into<BigInt>,
        c: impl Into<BigInt>,
        d: impl Into<BigInt>,
    ) -> Result<Self, Sl2Error> {
        let (a, b, c, d) = (a.into(), b.into(), c.into(), d.into());
        let det = &a * &d - &b * &c;
        if !det.is_one() {
            return Err(Sl2Error::Determinant(det));
        }
        Ok(Self { a, b, c, d })
    }

    /// Builds a matrix the caller already knows to be unimodular.
    pub(crate) fn from_parts_unchecked(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        debug_assert!((&a * &d - &b * &c).is_one());
        Self { a, b, c, d }
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self, Sl2Error> {
        Self::new(a, b, c, d)
    }

    pub fn identity() -> Self {
        Self::from_parts_unchecked(BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one())
    }

    pub fn minus_identity() -> Self {
        Self::from_parts_unchecked(
            -BigInt::one(),
            BigInt::zero(),
            BigInt::zero(),
            -BigInt::one(),
        )
    }

    /// `(1 k; 0 1)`.
    pub fn upper(k: impl Into<BigInt>) -> Self {
        Self::from_parts_unchecked(BigInt::one(), k.into(), BigInt::zero(), BigInt::one())
    }

    /// `(1 0; k 1)`.
    pub fn lower(k: impl Into<BigInt>) -> Self {
        Self::from_parts_unchecked(BigInt::one(), BigInt::zero(), k.into(), BigInt::one())
    }

    /// `(0 1; -1 0)`, the quarter turn that conjugates symmetric matrices to their inverses.
    pub fn quarter_turn() -> Self {
        Self::from_parts_unchecked(
            BigInt::zero(),
            BigInt::one(),
            -BigInt::one(),
            BigInt::zero(),
        )
    }

    /// `S = (0 -1; 1 0)`.
    pub fn s() -> Self {
        Self::from_parts_unchecked(
            BigInt::zero(),
            -BigInt::one(),
            BigInt::one(),
            BigInt::zero(),
        )
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn entries(&self) -> [&BigInt; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.d.is_one() && self.b.is_zero() && self.c.is_zero()
    }

    /// True for `±I`.
    pub fn is_central(&self) -> bool {
        self.b.is_zero() && self.c.is_zero()
    }

    pub fn is_symmetric(&self) -> bool {
        self.b == self.c
    }

    pub fn inverse(&self) -> Self {
        Self::from_parts_unchecked(self.d.clone(), -&self.b, -&self.c, self.a.clone())
    }

    pub fn neg(&self) -> Self {
        Self::from_parts_unchecked(-&self.a, -&self.b, -&self.c, -&self.d)
    }

    pub fn transpose(&self) -> Self {
        Self::from_parts_unchecked(
            self.a.clone(),
            self.c.clone(),
            self.b.clone(),
            self.d.clone(),
        )
    }

    /// `self · other · self⁻¹`.
    pub fn conjugate(&self, other: &Self) -> Self {
        &(self * other) * &self.inverse()
    }

    pub fn commutator(x: &Self, y: &Self) -> Self {
        &(&(x * y) * &x.inverse()) * &y.inverse()
    }

    /// Exact `k`-th power by repeated squaring; negative `k` uses the inverse.
    pub fn pow(&self, k: i64) -> Self {
        let mut base = if k < 0 { self.inverse() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn classify(&self) -> ElementClass {
        let t = self.trace().abs();
        let two = BigInt::from(2);
        if t < two {
            ElementClass::Elliptic
        } else if t > two {
            ElementClass::Hyperbolic
        } else if self.is_central() {
            if self.a.is_one() {
                ElementClass::Identity
            } else {
                ElementClass::MinusIdentity
            }
        } else {
            ElementClass::Parabolic
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.classify() == ElementClass::Hyperbolic
    }

    /// Maximum absolute entry, the matrix norm used for gating tests.
    pub fn max_abs_entry(&self) -> BigInt {
        self.entries()
            .iter()
            .map(|e| e.abs())
            .max()
            .unwrap_or_default()
    }

    /// True when every entry is `≥ 0`.
    pub fn is_nonnegative(&self) -> bool {
        self.entries().iter().all(|e| !e.is_negative())
    }

    /// Canonical representative of `±self` in PSL(2,Z): the first nonzero
    /// entry of `(c, d)` (or `a` when `c = 0`) is made positive.
    pub fn psl_canonical(&self) -> Self {
        let lead = if !self.c.is_zero() { &self.c } else { &self.d };
        if lead.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Checks `det = 1`; all constructors maintain it, this is for tests.
    pub fn determinant(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    /// Row vector action `(p, q) ↦ (p, q)·M`.
    pub fn act_row(&self, p: &BigInt, q: &BigInt) -> (BigInt, BigInt) {
        (p * &self.a + q * &self.c, p * &self.b + q * &self.d)
    }

    /// Entries as `f64`, saturating to ±inf when they do not fit.
    pub fn to_f64(&self) -> [f64; 4] {
        use num_traits::ToPrimitive;
        let f = |x: &BigInt| {
            x.to_f64().unwrap_or(if x.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            })
        };
        [f(&self.a), f(&self.b), f(&self.c), f(&self.d)]
    }

    /// gcd of the off-diagonal entries and `a − d`; the matrix is `±I` plus
    /// this value times a primitive matrix.
    pub fn content(&self) -> BigInt {
        let ad = &self.a - &self.d;
        self.b.gcd(&self.c).gcd(&ad)
    }
}

impl Mul for &UnimodularMatrix {
    type Output = UnimodularMatrix;

    fn mul(self, o: &UnimodularMatrix) -> UnimodularMatrix {
        UnimodularMatrix::from_parts_unchecked(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
        )
    }
}

impl Mul for UnimodularMatrix {
    type Output = UnimodularMatrix;

    fn mul(self, o: UnimodularMatrix) -> UnimodularMatrix {
        &self * &o
    }
}

impl fmt::Display for UnimodularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.d)
    }
}

impl FromStr for UnimodularMatrix {
    type Err = Sl2Error;

    /// Parses `"a,b,c,d"` (row-major, decimal, optional sign, whitespace allowed).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Sl2Error::Parse(format!(
                "expected 4 comma-separated integers, got {s:?}"
            )));
        }
        let mut vals = Vec::with_capacity(4);
        for p in parts {
            let p = p.strip_prefix('+').unwrap_or(p);
            let v: BigInt = p
                .parse()
                .map_err(|_| Sl2Error::Parse(format!("not an integer: {p:?}")))?;
            vals.push(v);
        }
        let d = vals.pop().unwrap();
        let c = vals.pop().unwrap();
        let b = vals.pop().unwrap();
        let a = vals.pop().unwrap();
        Self::new(a, b, c, d)
    }
}

impl Serialize for UnimodularMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for UnimodularMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: i64, b: i64, c: i64, d: i64) -> UnimodularMatrix {
        UnimodularMatrix::from_i64(a, b, c, d).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(m(2, 1, 1, 1).classify(), ElementClass::Hyperbolic);
        assert_eq!(m(1, 1, 0, 1).classify(), ElementClass::Parabolic);
        assert_eq!(m(0, 1, -1, 0).classify(), ElementClass::Elliptic);
        assert_eq!(m(-1, 0, 0, -1).classify(), ElementClass::MinusIdentity);
        assert_eq!(m(-1, 3, 0, -1).classify(), ElementClass::Parabolic);
        assert_eq!(
            UnimodularMatrix::identity().classify(),
            ElementClass::Identity
        );
    }

    #[test]
    fn powers() {
        let h = m(2, 1, 1, 1);
        assert_eq!(h.pow(0), UnimodularMatrix::identity());
        assert_eq!(h.pow(2), m(5, 3, 3, 2));
        assert_eq!(&h.pow(-3) * &h.pow(3), UnimodularMatrix::identity());
        for k in -5..=5 {
            assert_eq!(m(1, 1, 0, 1).pow(k), m(1, k, 0, 1));
        }
    }

    #[test]
    fn parse_and_print() {
        let h: UnimodularMatrix = "4, 9, 7, +16".parse().unwrap();
        assert_eq!(h, m(4, 9, 7, 16));
        assert_eq!(h.to_string(), "4,9,7,16");
        assert!(matches!(
            "1,0,0,2".parse::<UnimodularMatrix>(),
            Err(Sl2Error::Determinant(_))
        ));
        assert!(matches!(
            "1,0,0".parse::<UnimodularMatrix>(),
            Err(Sl2Error::Parse(_))
        ));
        assert!(matches!(
            "1,x,0,1".parse::<UnimodularMatrix>(),
            Err(Sl2Error::Parse(_))
        ));
    }

    #[test]
    fn row_action_convention() {
        // (0,1)·(1 1; 0 1) = (0,1): the top unipotent fixes (0,1) from the right.
        let t = UnimodularMatrix::upper(1);
        let (p, q) = t.act_row(&BigInt::zero(), &BigInt::one());
        assert_eq!((p, q), (BigInt::zero(), BigInt::one()));
        // (v·A)·B = v·(AB)
        let a = m(2, 1, 1, 1);
        let b = m(4, 9, 7, 16);
        let (x, y) = a.act_row(&BigInt::from(3), &BigInt::from(-5));
        let lhs = b.act_row(&x, &y);
        let rhs = (&a * &b).act_row(&BigInt::from(3), &BigInt::from(-5));
        assert_eq!(lhs, rhs);
    }
}
