use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MixError;

/// Decay law of the discarded Fourier tail: `‖R_N‖₂ ≤ c_F·N^{−γ}` for all `N ≥ 1`,
/// where `R_N` keeps the frequencies with `‖v‖ > N`.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct Tail {
    #[serde(rename = "c_F")]
    pub c_f: f64,
    pub gamma: f64,
}

/// Mean-zero function on the torus given by Fourier coefficients
/// `F(x) = Σ a(v) e^{2πi(v,x)}`, with an optional tail law for the terms
/// not listed.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Observable {
    terms: BTreeMap<(i64, i64), Complex64>,
    tail: Option<Tail>,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    v: [i64; 2],
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct ObservableRecord {
    terms: Vec<TermRecord>,
    #[serde(default)]
    tail: Option<Tail>,
}

impl Observable {
    /// Sums repeated frequencies and drops zero coefficients.
    pub fn new(
        terms: impl IntoIterator<Item = ((i64, i64), Complex64)>,
        tail: Option<Tail>,
    ) -> Result<Self, MixError> {
        let mut map = BTreeMap::new();
        for (v, a) in terms {
            if v == (0, 0) {
                return Err(MixError::InvalidObservable(
                    "the zero frequency is excluded (mean zero)".into(),
                ));
            }
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(MixError::InvalidObservable(format!(
                    "non-finite coefficient at {v:?}"
                )));
            }
            *map.entry(v).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        map.retain(|_, a| *a != Complex64::new(0.0, 0.0));
        if let Some(t) = tail {
            if !(t.gamma > 0.0) || !(t.c_f >= 0.0) || !t.c_f.is_finite() {
                return Err(MixError::InvalidObservable(format!(
                    "tail needs gamma > 0 and c_F >= 0, got {t:?}"
                )));
            }
        }
        Ok(Self { terms: map, tail })
    }

    /// `cos 2π(v, x)`: coefficients `1/2` at `±v`.
    pub fn cos_mode(p: i64, q: i64) -> Self {
        let half = Complex64::new(0.5, 0.0);
        Self::new([((p, q), half), ((-p, -q), half)], None).expect("nonzero frequency")
    }

    /// Real trigonometric polynomial with independent uniform coefficients on
    /// the frequencies of norm at most `radius`.
    pub fn random_real<R: Rng>(rng: &mut R, radius: i64) -> Self {
        let mut terms = Vec::new();
        for p in -radius..=radius {
            for q in -radius..=radius {
                // one representative of each pair ±v
                if (p, q) > (0, 0) && p * p + q * q <= radius * radius {
                    let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    terms.push(((p, q), a));
                    terms.push(((-p, -q), a.conj()));
                }
            }
        }
        Self::new(terms, None).expect("valid by construction")
    }

    /// Real observable with `a(v) = c·‖v‖^{−1−γ}` materialized up to `radius`,
    /// declaring the tail law that this profile satisfies.
    pub fn holder_profile(c: f64, gamma: f64, radius: i64) -> Result<Self, MixError> {
        let mut terms = Vec::new();
        for p in -radius..=radius {
            for q in -radius..=radius {
                let n2 = (p * p + q * q) as f64;
                if n2 > 0.0 && n2 <= (radius * radius) as f64 {
                    terms.push((
                        (p, q),
                        Complex64::new(c * n2.powf(-(1.0 + gamma) / 2.0), 0.0),
                    ));
                }
            }
        }
        // Σ_{‖v‖>N} ‖v‖^{−2−2γ} ≤ 2π·4^{1+γ}/(2γ)·N^{−2γ} by comparison with the annulus integral
        let c_f = c * (std::f64::consts::PI * 4f64.powf(1.0 + gamma) / gamma).sqrt();
        Self::new(terms, Some(Tail { c_f, gamma }))
    }

    pub fn coefficient(&self, v: (i64, i64)) -> Complex64 {
        self.terms.get(&v).copied().unwrap_or_default()
    }

    pub(crate) fn coefficient_big(&self, p: &BigInt, q: &BigInt) -> Complex64 {
        match (p.to_i64(), q.to_i64()) {
            (Some(p), Some(q)) => self.coefficient((p, q)),
            _ => Complex64::default(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i64, i64), Complex64)> + '_ {
        self.terms.iter().map(|(v, a)| (*v, *a))
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    /// `a(−v) = conj a(v)` for every listed `v`.
    pub fn is_real(&self) -> bool {
        self.terms
            .iter()
            .all(|(&(p, q), a)| self.coefficient((-p, -q)) == a.conj())
    }

    /// Largest squared norm in the support, `N_F²`; `0` when empty.
    pub fn max_freq_sq(&self) -> i64 {
        self.terms
            .keys()
            .map(|&(p, q)| p * p + q * q)
            .max()
            .unwrap_or(0)
    }

    /// `‖F‖₂` over the listed coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.terms
            .values()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// The terms with `‖v‖ ≤ n`, without tail.
    pub fn truncate(&self, n: u64) -> Observable {
        let n2 = (n as i128) * (n as i128);
        let terms = self
            .terms
            .iter()
            .filter(|(&(p, q), _)| (p as i128).pow(2) + (q as i128).pow(2) <= n2);
        Observable {
            terms: terms.map(|(v, a)| (*v, *a)).collect(),
            tail: None,
        }
    }

    /// The listed terms alone, with the tail law dropped.
    pub fn head(&self) -> Observable {
        Observable {
            terms: self.terms.clone(),
            tail: None,
        }
    }

    /// Pointwise value, for quadrature checks.
    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(p, q), a)| {
                a * Complex64::from_polar(
                    1.0,
                    std::f64::consts::TAU * (p as f64 * x + q as f64 * y),
                )
            })
            .sum()
    }

    pub fn from_json(s: &str) -> Result<Self, MixError> {
        let rec: ObservableRecord =
            serde_json::from_str(s).map_err(|e| MixError::InvalidObservable(e.to_string()))?;
        Self::new(
            rec.terms
                .into_iter()
                .map(|t| ((t.v[0], t.v[1]), Complex64::new(t.re, t.im))),
            rec.tail,
        )
    }

    pub fn to_json(&self) -> String {
        let rec = ObservableRecord {
            terms: self
                .terms
                .iter()
                .map(|(&(p, q), a)| TermRecord {
                    v: [p, q],
                    re: a.re,
                    im: a.im,
                })
                .collect(),
            tail: self.tail,
        };
        serde_json::to_string(&rec).expect("serializable")
    }
}
