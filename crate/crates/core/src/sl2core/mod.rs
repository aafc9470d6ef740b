//! Exact SL(2,Z) arithmetic, element classification and the decision
//! procedure for conjugacy of a hyperbolic matrix to its inverse.

mod conjugacy;
mod matrix;
mod quadratic;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use conjugacy::{
    factor_trial, is_conjugate_to_inverse, log_eigenvalue, positive_form, prime_criterion,
    word_length, ConjInverseMethod, ConjInverseVerdict, Lr, LrWord, PositiveForm, PrimeVerdict,
    DEFAULT_TRIAL_BOUND,
};
pub use matrix::{ElementClass, UnimodularMatrix};
pub use quadratic::{attracting_fixed_point, form_of, QuadIrrational, QuadraticForm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Sl2Error {
    #[error("determinant is {0}, expected 1")]
    Determinant(BigInt),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("matrix {0} is not hyperbolic")]
    NotHyperbolic(String),
    #[error("trial division exceeded the bound {bound}")]
    FactorizationTimeout { bound: u64 },
}

pub fn classify(m: &UnimodularMatrix) -> ElementClass {
    m.classify()
}

pub fn mat_pow(m: &UnimodularMatrix, k: i64) -> UnimodularMatrix {
    m.pow(k)
}

/// Natural log of `|n|` for integers of any size.
pub fn log_abs(n: &BigInt) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let n = n.abs();
    if let Some(f) = n.to_f64().filter(|f| f.is_finite()) {
        return f.ln();
    }
    let bits = n.bits();
    let shift = bits.saturating_sub(64);
    let top = (&n >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}
