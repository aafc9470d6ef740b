//! A homogeneous quasi-morphism on PSL(2,Z) that is 1 on a chosen primitive
//! hyperbolic `h` and vanishes on parabolics.
//!
//! `r_raw(g)` counts, with sign, the translates of one period of the axis of
//! `h` that the geodesic from `z₀` to `g·z₀` runs along. In the dual tree of
//! the Farey tessellation that geodesic is the normal form of `g`, and a
//! period of the axis is the cyclic word of `h`; so the count is the number
//! of occurrences of that word minus those of its inverse. All of this is
//! exact; the float walk in [`geometry`] reproduces the crossed edges and is
//! used as an independent check.

pub mod geometry;
pub mod normal_form;

use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sl2core::{is_conjugate_to_inverse, positive_form, LrWord, UnimodularMatrix};
pub use geometry::{axis, farey_walk, Axis, Cusp, FareyEdge, Geodesic, HPoint};
pub use normal_form::{letters_of_lr, Letter, NormalForm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmError {
    #[error("matrix {0} is not hyperbolic")]
    NotHyperbolic(String),
    #[error("element is the {power}-th power of {root}")]
    NotPrimitive {
        root: Box<UnimodularMatrix>,
        power: usize,
    },
    #[error("element is conjugate to its inverse via {witness}; every such quasi-morphism vanishes on it")]
    ConjugateToInverse { witness: Box<UnimodularMatrix> },
    #[error("engine validation failed: {0}")]
    DegenerateGeometry(String),
    #[error("no unambiguous base point after {attempts} attempts")]
    NumericallyAmbiguous { attempts: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Relative tolerance for the float walk.
    pub tol: f64,
    /// Base-point perturbations tried before giving up.
    pub retries: usize,
    /// Accepted for compatibility; the exact construction never shrinks.
    pub sigma_min: f64,
    pub defect_sample: usize,
    pub defect_word_len: usize,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            retries: 8,
            sigma_min: 2f64.powi(-20),
            defect_sample: 1000,
            defect_word_len: 16,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RHom {
    pub estimate: f64,
    pub error_bar: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectEstimate {
    pub value: f64,
    pub sample_size: usize,
    pub word_len: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct QmEngine {
    h: UnimodularMatrix,
    axis: Axis,
    /// `conj⁻¹·h·conj = ±word`; `r_raw` reads normal forms in these coordinates.
    conj: UnimodularMatrix,
    conj_inv: UnimodularMatrix,
    word: LrWord,
    pattern: Vec<Letter>,
    inverse_pattern: Vec<Letter>,
    base_point: HPoint,
    segment: (HPoint, HPoint),
    config: EngineConfig,
    defect: DefectEstimate,
}

/// Validates `h` and builds the engine, including the defect estimate.
pub fn build_engine(h: &UnimodularMatrix, config: EngineConfig) -> Result<QmEngine, QmError> {
    if !h.is_hyperbolic() {
        return Err(QmError::NotHyperbolic(h.to_string()));
    }
    let pf = positive_form(h).map_err(|_| QmError::NotHyperbolic(h.to_string()))?;
    let (root, power) = pf.word.primitive_root();
    if power > 1 {
        let x = pf.conj.conjugate(&root.matrix());
        // (−x)^k = h when the sign is negative and k odd
        let root = if pf.sign < 0 && power % 2 == 1 {
            x.neg()
        } else {
            x
        };
        return Err(QmError::NotPrimitive {
            root: Box::new(root),
            power,
        });
    }
    let ci = is_conjugate_to_inverse(h).map_err(|_| QmError::NotHyperbolic(h.to_string()))?;
    if ci.answer {
        return Err(QmError::ConjugateToInverse {
            witness: Box::new(ci.witness.expect("positive verdicts carry a witness")),
        });
    }

    let pattern = letters_of_lr(&pf.word);
    let inverse_pattern = NormalForm(pattern.clone()).inverse().0;
    let conj_inv = pf.conj.inverse();
    let axis = axis(h).expect("hyperbolic");

    // In reduced coordinates the axis runs from a negative to a positive
    // endpoint and meets the base edge (0, ∞) at i·√(−αβ).
    let w = pf.word.matrix();
    let wa = geometry::axis(&w).expect("hyperbolic");
    let (alpha, beta) = (wa.tail.to_f64(), wa.head.to_f64());
    let start = HPoint::new(0.0, (-alpha * beta).sqrt())
        .ok_or_else(|| QmError::DegenerateGeometry("reduced axis misses (0, ∞)".into()))?;
    let prefixes = NormalForm(pattern.clone()).crossing_prefixes();
    let last_edge = FareyEdge::base().mobius(prefixes.last().expect("nonempty word"));
    let end = last_edge
        .geodesic()
        .and_then(|g| wa.geodesic.intersect(&g))
        .ok_or_else(|| {
            QmError::DegenerateGeometry("axis misses the last edge of its period".into())
        })?;
    let base_point = start.mobius(&pf.conj);
    let segment = (base_point, end.mobius(&pf.conj));

    let mut engine = QmEngine {
        h: h.clone(),
        axis,
        conj: pf.conj,
        conj_inv,
        word: pf.word,
        pattern,
        inverse_pattern,
        base_point,
        segment,
        config: config.clone(),
        defect: DefectEstimate {
            value: 0.0,
            sample_size: 0,
            word_len: 0,
            seed: config.seed,
        },
    };
    engine.validate()?;
    engine.defect =
        engine.defect_estimate(config.defect_sample, config.defect_word_len, config.seed);
    Ok(engine)
}

impl QmEngine {
    pub fn h(&self) -> &UnimodularMatrix {
        &self.h
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    /// Cyclic L/R word of `h`; one period of the axis.
    pub fn word(&self) -> &LrWord {
        &self.word
    }

    pub fn pattern(&self) -> &[Letter] {
        &self.pattern
    }

    pub fn base_point(&self) -> HPoint {
        self.base_point
    }

    /// Oriented subsegment of the axis between the first and last Farey
    /// edges crossed in one period.
    pub fn segment(&self) -> (HPoint, HPoint) {
        self.segment
    }

    pub fn translation_length(&self) -> f64 {
        let t = self.h.trace().abs().to_f64().unwrap_or(f64::INFINITY);
        2.0 * (t / 2.0).acosh()
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Current defect estimate `D̂`.
    pub fn defect(&self) -> DefectEstimate {
        self.defect
    }

    pub fn set_defect(&mut self, d: DefectEstimate) {
        self.defect = d;
    }

    fn local(&self, g: &UnimodularMatrix) -> UnimodularMatrix {
        &(&self.conj_inv * g) * &self.conj
    }

    fn validate(&self) -> Result<(), QmError> {
        let len = self.segment.0.distance(&self.segment.1);
        if len.partial_cmp(&self.translation_length()) != Some(std::cmp::Ordering::Less) {
            return Err(QmError::DegenerateGeometry(format!(
                "segment length {len} is not below the translation length {}",
                self.translation_length()
            )));
        }
        // the stabiliser of the axis must be generated by h
        for n in 1..=3 {
            let r = self.r_raw(&self.h.pow(n));
            if r != n {
                return Err(QmError::DegenerateGeometry(format!("r_raw(h^{n}) = {r}")));
            }
        }
        if self.r_cyclic(&self.h) != 1 {
            return Err(QmError::DegenerateGeometry(
                "axis period is not a single copy of the segment".into(),
            ));
        }
        self.crossing_check(&self.h)?;
        Ok(())
    }

    /// Signed count of copies of the segment that the path from `z₀` to `g·z₀`
    /// runs along; exact, and constant on `±g`.
    pub fn r_raw(&self, g: &UnimodularMatrix) -> i64 {
        let nf = NormalForm::of(&self.local(g));
        nf.count(&self.pattern) as i64 - nf.count(&self.inverse_pattern) as i64
    }

    /// `r_raw(gⁿ)/n` at `n = n_max`, with error bar `D̂/n_max`.
    pub fn r_hom(&self, g: &UnimodularMatrix, n_max: u32) -> Result<RHom, QmError> {
        if n_max < 4 {
            return Err(QmError::InvalidArgument(format!(
                "n_max = {n_max}, need at least 4"
            )));
        }
        let r = self.r_raw(&g.pow(n_max as i64));
        let n = n_max as f64;
        Ok(RHom {
            estimate: r as f64 / n,
            error_bar: self.defect.value / n,
        })
    }

    /// The exact homogenization: copies per period along the closed geodesic
    /// of `g`. Conjugation invariant; zero on elliptic and parabolic classes
    /// other than those with the word of `h`.
    pub fn r_cyclic(&self, g: &UnimodularMatrix) -> i64 {
        let cr = NormalForm::of(g).cyclic_reduction();
        cr.count_cyclic(&self.pattern) as i64 - cr.count_cyclic(&self.inverse_pattern) as i64
    }

    /// Farey edges crossed by the path from the reduced base triangle to its
    /// image under `g`, read off the normal form.
    pub fn crossed_edges(&self, g: &UnimodularMatrix) -> Vec<FareyEdge> {
        NormalForm::of(&self.local(g))
            .crossing_prefixes()
            .iter()
            .map(|p| FareyEdge::base().mobius(p))
            .collect()
    }

    /// Recomputes the crossed edges by walking a float geodesic through the
    /// tessellation, perturbing the base point on ambiguity; fails after the
    /// retry budget. Returns the number of edges crossed.
    pub fn crossing_check(&self, g: &UnimodularMatrix) -> Result<usize, QmError> {
        let local = self.local(g);
        let exact = self.crossed_edges(g);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x5eed);
        let attempts = self.config.retries.max(1);
        let budget = 4 * exact.len() + 64;
        for k in 0..attempts {
            let mut z0 = HPoint::omega();
            if k > 0 {
                z0.x += rng.gen_range(-0.1..0.1);
                z0.y += rng.gen_range(-0.1..0.1);
            }
            match farey_walk(&local, z0, self.config.tol, budget) {
                Ok(path) if path == exact => return Ok(path.len()),
                Ok(path) => {
                    return Err(QmError::DegenerateGeometry(format!(
                        "float walk crossed {} edges, normal form {}",
                        path.len(),
                        exact.len()
                    )))
                }
                Err(_) => continue,
            }
        }
        Err(QmError::NumericallyAmbiguous { attempts })
    }

    /// `r_raw` together with the float cross-check of the underlying path.
    pub fn r_raw_checked(&self, g: &UnimodularMatrix) -> Result<i64, QmError> {
        self.crossing_check(g)?;
        Ok(self.r_raw(g))
    }

    /// Largest `|r_raw(g₁g₂) − r_raw(g₁) − r_raw(g₂)|` over `sample_size`
    /// random pairs of words of length at most `word_len` in `S`, `T^{±1}`
    /// and `h^{±1}`. Including `h` makes the counted pattern actually occur.
    pub fn defect_estimate(
        &self,
        sample_size: usize,
        word_len: usize,
        seed: u64,
    ) -> DefectEstimate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = [
            UnimodularMatrix::s(),
            UnimodularMatrix::upper(1),
            UnimodularMatrix::upper(-1),
            self.h.clone(),
            self.h.inverse(),
        ];
        let word = |rng: &mut ChaCha8Rng| {
            let len = if word_len == 0 {
                0
            } else {
                rng.gen_range(1..=word_len)
            };
            (0..len).fold(UnimodularMatrix::identity(), |acc, _| {
                &acc * &gens[rng.gen_range(0..gens.len())]
            })
        };
        let mut best = 0i64;
        for _ in 0..sample_size {
            let g1 = word(&mut rng);
            let g2 = word(&mut rng);
            let d = self.r_raw(&(&g1 * &g2)) - self.r_raw(&g1) - self.r_raw(&g2);
            best = best.max(d.abs());
        }
        DefectEstimate {
            value: best as f64,
            sample_size,
            word_len,
            seed,
        }
    }
}

/// One evaluation record as emitted by the command line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct REvaluation {
    pub g: UnimodularMatrix,
    pub n_max: u32,
    pub estimate: f64,
    pub error_bar: f64,
}
