use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Sl2Error, UnimodularMatrix};

/// Binary quadratic form `A x² + B xy + C y²`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct QuadraticForm {
    #[serde(with = "crate::serde_util")]
    pub a: BigInt,
    #[serde(with = "crate::serde_util")]
    pub b: BigInt,
    #[serde(with = "crate::serde_util")]
    pub c: BigInt,
}

impl QuadraticForm {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>, c: impl Into<BigInt>) -> Self {
        Self {
            a: a.into(),
            b: b.into(),
            c: c.into(),
        }
    }

    pub fn discriminant(&self) -> BigInt {
        &self.b * &self.b - BigInt::from(4) * &self.a * &self.c
    }

    pub fn eval(&self, x: &BigInt, y: &BigInt) -> BigInt {
        &self.a * x * x + &self.b * x * y + &self.c * y * y
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x^2 + {}xy + {}y^2", self.a, self.b, self.c)
    }
}

/// `Q(x, y) = c x² + (a − d) xy − b y²` for `m = (a b; c d)`.
///
/// With `conj = (z t; x y)` the lower-left entry of `conj·m·conj⁻¹` is
/// `Q(y, x)`; this is checked by exact multiplication in the tests.
pub fn form_of(m: &UnimodularMatrix) -> Result<QuadraticForm, Sl2Error> {
    if !m.is_hyperbolic() {
        return Err(Sl2Error::NotHyperbolic(m.to_string()));
    }
    Ok(QuadraticForm::new(m.c().clone(), m.a() - m.d(), -m.b()))
}

/// Real quadratic irrational `(p + √disc)/q` with `q | disc − p²` and `disc`
/// a positive non-square.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QuadIrrational {
    pub p: BigInt,
    pub disc: BigInt,
    pub q: BigInt,
}

impl QuadIrrational {
    /// `(p + sign·√disc)/q`, normalised so the divisibility condition holds.
    pub fn new(p: BigInt, sign: i32, disc: BigInt, q: BigInt) -> Self {
        assert!(!q.is_zero());
        let (mut p, mut q, mut disc) = if sign >= 0 {
            (p, q, disc)
        } else {
            (-p, -q, disc)
        };
        if !(&disc - &p * &p).is_multiple_of(&q) {
            let qa = q.abs();
            p *= &qa;
            disc *= &qa * &qa;
            q *= &qa;
        }
        Self { p, disc, q }
    }

    /// Galois conjugate `(p − √disc)/q`.
    pub fn conjugate(&self) -> Self {
        Self {
            p: -&self.p,
            disc: self.disc.clone(),
            q: -&self.q,
        }
    }

    pub fn floor(&self) -> BigInt {
        let s = self.disc.sqrt();
        let n = &self.p + &s;
        if self.q.is_positive() {
            n.div_floor(&self.q)
        } else {
            -(n.div_floor(&self.q.abs()) + BigInt::one())
        }
    }

    /// Complete quotient after removing the integer part `a`: `1/(x − a)`.
    fn next_quotient(&self, a: &BigInt) -> Self {
        let p1 = a * &self.q - &self.p;
        let q1 = (&self.disc - &p1 * &p1) / &self.q;
        Self {
            p: p1,
            disc: self.disc.clone(),
            q: q1,
        }
    }

    /// Reduced in the sense of Galois: `x > 1` and `−1 < x' < 0`.
    pub fn is_reduced(&self) -> bool {
        self.floor() >= BigInt::one() && self.conjugate().floor() == -BigInt::one()
    }

    pub fn to_f64(&self) -> f64 {
        let s = self.disc.to_f64().unwrap_or(f64::INFINITY).sqrt();
        (self.p.to_f64().unwrap_or(f64::NAN) + s) / self.q.to_f64().unwrap_or(f64::NAN)
    }

    /// Continued fraction expansion of `self`, lazily.
    pub fn partial_quotients(&self) -> PartialQuotients {
        PartialQuotients { x: self.clone() }
    }
}

pub struct PartialQuotients {
    x: QuadIrrational,
}

impl Iterator for PartialQuotients {
    type Item = (BigInt, QuadIrrational);

    /// Yields `(a_k, x_k)` where `x_k` is the complete quotient whose floor is `a_k`.
    fn next(&mut self) -> Option<Self::Item> {
        let a = self.x.floor();
        let cur = self.x.clone();
        self.x = self.x.next_quotient(&a);
        Some((a, cur))
    }
}

/// Attracting fixed point of `z ↦ (az + b)/(cz + d)` for hyperbolic `m`.
pub fn attracting_fixed_point(m: &UnimodularMatrix) -> QuadIrrational {
    let t = m.trace();
    let disc = &t * &t - BigInt::from(4);
    let sign = if t.is_positive() { 1 } else { -1 };
    QuadIrrational::new(m.a() - m.d(), sign, disc, BigInt::from(2) * m.c())
}

pub(crate) fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let s = n.sqrt();
    &s * &s == *n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: i64, b: i64, c: i64, d: i64) -> UnimodularMatrix {
        UnimodularMatrix::from_i64(a, b, c, d).unwrap()
    }

    #[test]
    fn form_examples() {
        let q = form_of(&m(4, 9, 7, 16)).unwrap();
        assert_eq!(q, QuadraticForm::new(7, -12, -9));
        assert_eq!(q.discriminant(), BigInt::from(396));
        let q = form_of(&m(2, 1, 1, 1)).unwrap();
        assert_eq!(q, QuadraticForm::new(1, 1, -1));
        assert_eq!(q.discriminant(), BigInt::from(5));
        assert!(form_of(&m(1, 1, 0, 1)).is_err());
    }

    #[test]
    fn conjugated_lower_left_is_form_value() {
        let f = m(4, 9, 7, 16);
        let q = form_of(&f).unwrap();
        for (z, t, x, y) in [
            (1, 0, 0, 1),
            (2, 1, 1, 1),
            (1, 3, 0, 1),
            (3, -2, -1, 1),
            (0, 1, -1, 5),
        ] {
            let conj = m(z, t, x, y);
            let g = conj.conjugate(&f);
            assert_eq!(*g.c(), q.eval(&BigInt::from(y), &BigInt::from(x)));
        }
    }

    #[test]
    fn floor_matches_float() {
        for (p, s, d, q) in [
            (1, 1, 5, 2),
            (1, -1, 5, 2),
            (-3, 1, 13, -2),
            (7, -1, 396, 14),
            (0, 1, 2, 1),
        ] {
            let x = QuadIrrational::new(BigInt::from(p), s, BigInt::from(d), BigInt::from(q));
            let v = (p as f64 + s as f64 * (d as f64).sqrt()) / q as f64;
            assert_eq!(x.floor(), BigInt::from(v.floor() as i64), "{p} {s} {d} {q}");
            assert!((x.to_f64() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_ratio_expansion() {
        let phi = QuadIrrational::new(BigInt::one(), 1, BigInt::from(5), BigInt::from(2));
        let qs: Vec<BigInt> = phi.partial_quotients().take(6).map(|(a, _)| a).collect();
        assert!(qs.iter().all(|a| a.is_one()));
        assert!(phi.is_reduced());
    }

    #[test]
    fn sqrt_two_expansion() {
        let r2 = QuadIrrational::new(BigInt::zero(), 1, BigInt::from(2), BigInt::one());
        let qs: Vec<i64> = r2
            .partial_quotients()
            .take(5)
            .map(|(a, _)| a.to_i64().unwrap())
            .collect();
        assert_eq!(qs, vec![1, 2, 2, 2, 2]);
    }

    #[test]
    fn fixed_point_is_fixed() {
        for h in [
            m(2, 1, 1, 1),
            m(4, 9, 7, 16),
            m(-3, 1, -1, 0),
            m(1, 1, 5, 6),
        ] {
            let w = attracting_fixed_point(&h).to_f64();
            let [a, b, c, d] = h.to_f64();
            let img = (a * w + b) / (c * w + d);
            assert!((img - w).abs() < 1e-9, "{h}");
            // attracting: |cw + d| > 1
            assert!((c * w + d).abs() > 1.0);
        }
    }
}
