//! Kicked cat maps `f⁽ⁿ⁾ = φₙhᵗ⋯φ₁hᵗ` and their correlation functions.
//!
//! Correlations are computed in coefficient space:
//! `C(F₁, F₂; f) = Σ_{v ∈ supp F₂} a₁(−v·f)·a₂(v)`, which is
//! `∫ F₁(f⁻¹x)·F₂(x) dx` for the column action of `f⁻¹` on the torus.

mod observable;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::euclid::IntVector2;
use crate::sl2core::{log_abs, UnimodularMatrix};
pub use observable::{Observable, Tail};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixError {
    #[error("kick {index} has trace {trace}, above the declared bound {bound}")]
    TraceBoundViolated {
        index: usize,
        trace: BigInt,
        bound: BigInt,
    },
    #[error("kick list has {available} entries, {needed} needed")]
    KicksExhausted { needed: usize, available: usize },
    #[error("observable declares an infinite tail; use the Hölder bound instead")]
    InfiniteTail,
    #[error("observable has no tail descriptor")]
    NoTail,
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("every correlation is exactly zero: decay is faster than exponential")]
    AllZero,
    #[error("need at least 4 nonzero points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Where the kicks `φ₁, φ₂, …` come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KickSource {
    /// Every kick is the identity.
    None,
    /// `φᵢ` is the `i`-th entry; running out is an error.
    List { kicks: Vec<UnimodularMatrix> },
    /// The list repeated.
    Periodic { kicks: Vec<UnimodularMatrix> },
    /// Independent uniform draws from `alphabet`.
    Alphabet {
        alphabet: Vec<UnimodularMatrix>,
        seed: u64,
    },
}

impl KickSource {
    /// `{(1 1; 0 1), (1 0; 1 1), (0 1; −1 0)}`, all of trace at most 2.
    pub fn default_alphabet(seed: u64) -> KickSource {
        KickSource::Alphabet {
            alphabet: vec![
                UnimodularMatrix::upper(1),
                UnimodularMatrix::lower(1),
                UnimodularMatrix::quarter_turn(),
            ],
            seed,
        }
    }

    /// The first `n` kicks.
    pub fn materialize(&self, n: usize) -> Result<Vec<UnimodularMatrix>, MixError> {
        match self {
            KickSource::None => Ok(vec![UnimodularMatrix::identity(); n]),
            KickSource::List { kicks } => {
                if kicks.len() < n {
                    return Err(MixError::KicksExhausted {
                        needed: n,
                        available: kicks.len(),
                    });
                }
                Ok(kicks[..n].to_vec())
            }
            KickSource::Periodic { kicks } => {
                if kicks.is_empty() {
                    return Err(MixError::KicksExhausted {
                        needed: n,
                        available: 0,
                    });
                }
                Ok((0..n).map(|i| kicks[i % kicks.len()].clone()).collect())
            }
            KickSource::Alphabet { alphabet, seed } => {
                if alphabet.is_empty() {
                    return Err(MixError::KicksExhausted {
                        needed: n,
                        available: 0,
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..n)
                    .map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone())
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KickedSystemSpec {
    pub h: UnimodularMatrix,
    pub t: u32,
    pub kicks: KickSource,
    /// Declared bound on `|trace φᵢ|`.
    pub trace_bound: u64,
}

/// Materialized products `f⁽¹⁾, …, f⁽ⁿ⁾`.
#[derive(Clone, Debug)]
pub struct SequentialSystem {
    spec: KickedSystemSpec,
    ht: UnimodularMatrix,
    kicks: Vec<UnimodularMatrix>,
    products: Vec<UnimodularMatrix>,
}

pub fn compose(spec: &KickedSystemSpec, n_max: usize) -> Result<SequentialSystem, MixError> {
    if spec.t == 0 || n_max == 0 {
        return Err(MixError::InvalidArgument(
            "t and n_max must be at least 1".into(),
        ));
    }
    let mut sys = SequentialSystem {
        spec: spec.clone(),
        ht: spec.h.pow(spec.t as i64),
        kicks: Vec::new(),
        products: Vec::new(),
    };
    sys.extend_to(n_max)?;
    Ok(sys)
}

impl SequentialSystem {
    /// Materializes further products; existing ones are kept.
    pub fn extend_to(&mut self, n_max: usize) -> Result<(), MixError> {
        if n_max <= self.products.len() {
            return Ok(());
        }
        let kicks = self.spec.kicks.materialize(n_max)?;
        let bound = BigInt::from(self.spec.trace_bound);
        for (i, k) in kicks.iter().enumerate().skip(self.kicks.len()) {
            let tr = k.trace();
            if tr.abs() > bound {
                return Err(MixError::TraceBoundViolated {
                    index: i + 1,
                    trace: tr,
                    bound,
                });
            }
        }
        for k in &kicks[self.products.len()..] {
            let step = k * &self.ht;
            let next = match self.products.last() {
                Some(prev) => &step * prev,
                None => step,
            };
            self.products.push(next);
        }
        self.kicks = kicks;
        Ok(())
    }

    pub fn spec(&self) -> &KickedSystemSpec {
        &self.spec
    }

    pub fn n_max(&self) -> usize {
        self.products.len()
    }

    /// `f⁽ⁿ⁾` for `1 ≤ n ≤ n_max`.
    pub fn get(&self, n: usize) -> &UnimodularMatrix {
        &self.products[n - 1]
    }

    /// `φₙ` for `1 ≤ n ≤ n_max`.
    pub fn kick(&self, n: usize) -> &UnimodularMatrix {
        &self.kicks[n - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &UnimodularMatrix)> {
        self.products.iter().enumerate().map(|(i, f)| (i + 1, f))
    }
}

/// Exact `Σ_{v ∈ supp F₂} a₁(−v·f)·a₂(v)`.
pub fn correlation(
    f1: &Observable,
    f2: &Observable,
    f: &UnimodularMatrix,
) -> Result<Complex64, MixError> {
    if !f1.is_finite() || !f2.is_finite() {
        return Err(MixError::InfiniteTail);
    }
    Ok(head_correlation(f1, f2, f))
}

fn head_correlation(f1: &Observable, f2: &Observable, f: &UnimodularMatrix) -> Complex64 {
    f2.terms()
        .map(|((p, q), a2)| {
            let (x, y) = f.act_row(&BigInt::from(p), &BigInt::from(q));
            f1.coefficient_big(&-x, &-y) * a2
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderBound {
    pub exact_head: Complex64,
    pub tail_bound: f64,
}

impl HolderBound {
    /// Bound on `|C(F, F; f)|`.
    pub fn total(&self) -> f64 {
        self.exact_head.norm() + self.tail_bound
    }
}

/// Splits `F = F_N + R_N` and bounds the autocorrelation by the exact head
/// plus `2‖F‖₂·c_F·N^{−γ}`.
pub fn correlation_bound_holder(
    f_obs: &Observable,
    f: &UnimodularMatrix,
    n: u64,
) -> Result<HolderBound, MixError> {
    let tail = f_obs.tail().ok_or(MixError::NoTail)?;
    if n == 0 {
        return Err(MixError::InvalidArgument(
            "truncation frequency must be at least 1".into(),
        ));
    }
    let head = f_obs.truncate(n);
    let exact_head = head_correlation(&head, &head, f);
    let tail_bound = 2.0 * f_obs.l2_norm() * tail.c_f * (n as f64).powf(-tail.gamma);
    Ok(HolderBound {
        exact_head,
        tail_bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinExpansion {
    pub value: f64,
    /// `ln` of the value; finite even when the value overflows `f64`.
    pub log_value: f64,
    pub norm_sq: BigInt,
    pub argmin: IntVector2,
}

/// Minimum of `‖v·f‖` over nonzero integer `v` with `‖v‖ ≤ v_max`, by
/// exhaustive scan with exact squared norms. Ties go to the shortest `v`,
/// then to the last in lexicographic order.
pub fn min_expansion(f: &UnimodularMatrix, v_max: u64) -> MinExpansion {
    let r = v_max.max(1) as i64;
    min_expansion_sq(f, (r as i128 * r as i128) as i64).expect("radius at least 1")
}

/// Same with the radius given by its square; `None` when no vector fits.
pub fn min_expansion_sq(f: &UnimodularMatrix, radius_sq: i64) -> Option<MinExpansion> {
    let r = (radius_sq.max(0) as f64).sqrt().floor() as i64 + 1;
    let mut best: Option<(BigInt, IntVector2)> = None;
    for p in -r..=r {
        for q in -r..=r {
            if (p, q) == (0, 0) || p * p + q * q > radius_sq {
                continue;
            }
            let v = IntVector2::new(p, q);
            let n = v.mul_matrix(f).norm_sq();
            let better = best
                .as_ref()
                .is_none_or(|(b, w)| n < *b || (n == *b && v.norm_sq() <= w.norm_sq()));
            if better {
                best = Some((n, v));
            }
        }
    }
    best.map(|(n, argmin)| {
        let log_value = log_abs(&n) / 2.0;
        MinExpansion {
            value: log_value.exp(),
            log_value,
            norm_sq: n,
            argmin,
        }
    })
}

/// Largest `N` with `min_{v≠0} (‖v‖² + ‖v·f‖²) > 2N²`; then no frequency of
/// norm at most `N` is mapped by `f` to one of norm at most `N`, so the head
/// correlation of the truncation at `N` vanishes.
pub fn safe_truncation(f: &UnimodularMatrix) -> BigInt {
    let m = min_gram(f);
    ((m - BigInt::one()) / BigInt::from(2)).sqrt()
}

/// Minimum of the positive definite form `v·(I + f fᵀ)·vᵀ` by Lagrange reduction.
fn min_gram(f: &UnimodularMatrix) -> BigInt {
    let (a, b, c, d) = (f.a(), f.b(), f.c(), f.d());
    let g11 = BigInt::one() + a * a + b * b;
    let g12 = a * c + b * d;
    let g22 = BigInt::one() + c * c + d * d;
    let ip = |u: &(BigInt, BigInt), w: &(BigInt, BigInt)| -> BigInt {
        &u.0 * &w.0 * &g11 + (&u.0 * &w.1 + &u.1 * &w.0) * &g12 + &u.1 * &w.1 * &g22
    };
    let mut u = (BigInt::one(), BigInt::zero());
    let mut w = (BigInt::zero(), BigInt::one());
    loop {
        if ip(&w, &w) < ip(&u, &u) {
            std::mem::swap(&mut u, &mut w);
        }
        let nu = ip(&u, &u);
        let x = ip(&u, &w);
        // nearest integer to x / nu
        let mu = (BigInt::from(2) * &x + &nu).div_floor(&(BigInt::from(2) * &nu));
        if mu.is_zero() {
            return nu;
        }
        w = (&w.0 - &mu * &u.0, &w.1 - &mu * &u.1);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroTime {
    At(usize),
    NotReached,
}

/// First `n₀` such that for every materialized `n ≥ n₀` the map `f⁽ⁿ⁾` sends
/// every frequency of norm at most `N_F` outside that disc.
pub fn zero_time(f_obs: &Observable, sys: &SequentialSystem) -> ZeroTime {
    let r2 = f_obs.max_freq_sq();
    if r2 == 0 {
        return ZeroTime::At(1);
    }
    let bound = BigInt::from(r2);
    let mut n0 = None;
    for (n, f) in sys.iter().collect::<Vec<_>>().into_iter().rev() {
        let me = min_expansion_sq(f, r2).expect("nonempty disc");
        if me.norm_sq > bound {
            n0 = Some(n);
        } else {
            break;
        }
    }
    n0.map_or(ZeroTime::NotReached, ZeroTime::At)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub r2: f64,
    pub points: usize,
    pub zeros: usize,
}

/// Least-squares fit of `log|C|` against `n`; exact zeros are counted but
/// excluded from the fit.
pub fn decay_fit(series: &[(u32, f64)]) -> Result<DecayFit, MixError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, c)| *c > 0.0)
        .map(|&(n, c)| (n as f64, c.ln()))
        .collect();
    let zeros = series.len() - pts.len();
    if pts.is_empty() && !series.is_empty() {
        return Err(MixError::AllZero);
    }
    if pts.len() < 4 {
        return Err(MixError::TooFewPoints(pts.len()));
    }
    let (slope, r2) = least_squares(&pts);
    Ok(DecayFit {
        rate: -slope,
        r2,
        points: pts.len(),
        zeros,
    })
}

/// `(slope, r²)`; `r² = 1` for a constant series.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let r2 = if syy <= f64::EPSILON * n * (my.abs() + 1.0) {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    (slope, r2)
}

/// `ln ‖f‖` with the max-entry norm.
pub fn log_norm(f: &UnimodularMatrix) -> f64 {
    log_abs(&f.max_abs_entry())
}
