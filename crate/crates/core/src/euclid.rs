//! Euclidean decomposition of primitive integer vectors into elementary
//! matrices, and the lower bound it gives on `‖v·A‖`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sl2core::UnimodularMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EuclidError {
    #[error("vector ({0},{1}) is not primitive")]
    NonPrimitive(BigInt, BigInt),
    #[error("zero vector")]
    Zero,
    #[error("defect norm must be positive, got {0}")]
    NonPositiveDefect(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Integer row vector `(p, q)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct IntVector2 {
    pub p: BigInt,
    pub q: BigInt,
}

impl IntVector2 {
    pub fn new(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Self {
        Self {
            p: p.into(),
            q: q.into(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn is_primitive(&self) -> bool {
        self.p.gcd(&self.q).is_one()
    }

    pub fn norm_sq(&self) -> BigInt {
        &self.p * &self.p + &self.q * &self.q
    }

    pub fn norm(&self) -> f64 {
        let n = self.norm_sq();
        match n.to_f64() {
            Some(f) if f.is_finite() => f.sqrt(),
            _ => (crate::sl2core::log_abs(&n) / 2.0).exp(),
        }
    }

    /// `v·M`.
    pub fn mul_matrix(&self, m: &UnimodularMatrix) -> IntVector2 {
        let (p, q) = m.act_row(&self.p, &self.q);
        IntVector2 { p, q }
    }

    pub fn neg(&self) -> IntVector2 {
        IntVector2 {
            p: -&self.p,
            q: -&self.q,
        }
    }
}

impl fmt::Display for IntVector2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.p, self.q)
    }
}

impl FromStr for IntVector2 {
    type Err = EuclidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(EuclidError::Parse(format!("expected \"p,q\", got {s:?}")));
        }
        let parse = |x: &str| -> Result<BigInt, EuclidError> {
            x.strip_prefix('+')
                .unwrap_or(x)
                .parse()
                .map_err(|_| EuclidError::Parse(format!("not an integer: {x:?}")))
        };
        Ok(IntVector2 {
            p: parse(parts[0])?,
            q: parse(parts[1])?,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Side {
    Upper,
    Lower,
}

/// `(1 k; 0 1)` for `Upper`, `(1 0; k 1)` for `Lower`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct ElementaryFactor {
    pub side: Side,
    #[serde(with = "crate::serde_util")]
    pub k: BigInt,
}

impl ElementaryFactor {
    pub fn new(side: Side, k: impl Into<BigInt>) -> Self {
        Self { side, k: k.into() }
    }

    pub fn matrix(&self) -> UnimodularMatrix {
        match self.side {
            Side::Upper => UnimodularMatrix::upper(self.k.clone()),
            Side::Lower => UnimodularMatrix::lower(self.k.clone()),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            side: self.side,
            k: -&self.k,
        }
    }
}

/// Ordered product of elementary matrices; `(0,1)·W` recovers the vector it came from.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementaryWord(pub Vec<ElementaryFactor>);

impl ElementaryWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn matrix(&self) -> UnimodularMatrix {
        self.0
            .iter()
            .fold(UnimodularMatrix::identity(), |acc, f| &acc * &f.matrix())
    }

    pub fn apply_to_base(&self) -> IntVector2 {
        IntVector2::new(0, 1).mul_matrix(&self.matrix())
    }

    /// Merges neighbours on the same side and drops `k = 0`.
    fn push_merged(&mut self, f: ElementaryFactor) {
        if f.k.is_zero() {
            return;
        }
        if let Some(last) = self.0.last_mut() {
            if last.side == f.side {
                last.k += f.k;
                if last.k.is_zero() {
                    self.0.pop();
                }
                return;
            }
        }
        self.0.push(f);
    }
}

/// Quotient `k` minimising `|n − k·m|`, ties broken toward the nonnegative remainder.
fn nearest_quotient(n: &BigInt, m: &BigInt) -> BigInt {
    let k0 = n.div_floor(m);
    let r0 = n - &k0 * m;
    let r1 = &r0 - m;
    match r0.abs().cmp(&r1.abs()) {
        std::cmp::Ordering::Less => k0,
        std::cmp::Ordering::Greater => k0 + 1,
        std::cmp::Ordering::Equal => {
            if r0.is_negative() {
                k0 + 1
            } else {
                k0
            }
        }
    }
}

/// Writes a primitive `v` as `(0,1)·W` with `W` a product of elementary matrices.
pub fn decompose_primitive(v: &IntVector2) -> Result<ElementaryWord, EuclidError> {
    if v.is_zero() {
        return Err(EuclidError::Zero);
    }
    if !v.is_primitive() {
        return Err(EuclidError::NonPrimitive(v.p.clone(), v.q.clone()));
    }
    let (mut p, mut q) = (v.p.clone(), v.q.clone());
    // right multiplications E_i with v·E_1⋯E_n = base; we store E_i⁻¹
    let mut undo: Vec<ElementaryFactor> = Vec::new();
    while !p.is_zero() && !q.is_zero() {
        if q.abs() >= p.abs() {
            let k = nearest_quotient(&q, &p);
            q -= &k * &p;
            undo.push(ElementaryFactor::new(Side::Upper, k));
        } else {
            let k = nearest_quotient(&p, &q);
            p -= &k * &q;
            undo.push(ElementaryFactor::new(Side::Lower, k));
        }
    }
    let base: Vec<ElementaryFactor> = match (p.is_zero(), q.is_positive(), p.is_positive()) {
        (true, true, _) => vec![],
        (true, false, _) => vec![
            ElementaryFactor::new(Side::Lower, 1),
            ElementaryFactor::new(Side::Upper, -2),
            ElementaryFactor::new(Side::Lower, 1),
        ],
        (false, _, true) => vec![
            ElementaryFactor::new(Side::Lower, 1),
            ElementaryFactor::new(Side::Upper, -1),
        ],
        (false, _, false) => vec![
            ElementaryFactor::new(Side::Lower, -1),
            ElementaryFactor::new(Side::Upper, 1),
        ],
    };
    let mut word = ElementaryWord::default();
    for f in base.into_iter().chain(undo.into_iter().rev()) {
        word.push_merged(f);
    }
    debug_assert_eq!(word.apply_to_base(), *v);
    Ok(word)
}

/// `log₂‖v‖ + 10`, the length budget for the word of `v`.
pub fn length_budget(v: &IntVector2) -> f64 {
    v.norm().log2() + 10.0
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParabolicCompletion {
    pub h1: UnimodularMatrix,
    pub h2: UnimodularMatrix,
    pub h3: UnimodularMatrix,
}

/// `h1`, `h2` carry `(0,1)` to `v` and `v·f`; `h3 = h1·f·h2⁻¹` fixes `(0,1)`
/// and is therefore `(1 b; 0 1)`.
pub fn parabolic_completion(
    v: &IntVector2,
    f: &UnimodularMatrix,
) -> Result<ParabolicCompletion, EuclidError> {
    let h1 = decompose_primitive(v)?.matrix();
    let vf = v.mul_matrix(f);
    let h2 = decompose_primitive(&vf)?.matrix();
    let h3 = &(&h1 * f) * &h2.inverse();
    assert!(
        h3.c().is_zero() && h3.d().is_one() && h3.a().is_one(),
        "h3 must fix (0,1)"
    );
    Ok(ParabolicCompletion { h1, h2, h3 })
}

/// `2⁻²² · 2^{|r(f)|/‖dr‖} / ‖v‖`.
pub fn vector_lower_bound(v: &IntVector2, r_of_f: f64, dr_norm: f64) -> Result<f64, EuclidError> {
    if !(dr_norm > 0.0) {
        return Err(EuclidError::NonPositiveDefect(dr_norm));
    }
    if v.is_zero() {
        return Err(EuclidError::Zero);
    }
    Ok(2f64.powf(r_of_f.abs() / dr_norm - 22.0) / v.norm())
}
