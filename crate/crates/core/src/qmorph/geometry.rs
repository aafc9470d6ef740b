//! Hyperbolic geometry in floating point: points, geodesics, and a walk
//! through the Farey tessellation used to cross-check the exact tree paths.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::sl2core::{attracting_fixed_point, QuadIrrational, UnimodularMatrix};

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

impl HPoint {
    /// `None` unless `y > 0`.
    pub fn new(x: f64, y: f64) -> Option<Self> {
        (y > 0.0 && x.is_finite() && y.is_finite()).then_some(Self { x, y })
    }

    /// `ω = e^{2πi/3}`, the centre of the base triangle `(-1, 0, ∞)`.
    pub fn omega() -> Self {
        Self {
            x: -0.5,
            y: 3f64.sqrt() / 2.0,
        }
    }

    pub fn distance(&self, other: &HPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (1.0 + (dx * dx + dy * dy) / (2.0 * self.y * other.y)).acosh()
    }

    /// `z ↦ (az + b)/(cz + d)`.
    pub fn mobius(&self, m: &UnimodularMatrix) -> HPoint {
        let [a, b, c, d] = m.to_f64();
        let (x, y) = (self.x, self.y);
        // (a z + b)(c z̄ + d) / |c z + d|²
        let nr = a * x + b;
        let dr = c * x + d;
        let den = dr * dr + c * c * y * y;
        let re = (nr * dr + a * c * y * y) / den;
        let im = y / den;
        HPoint { x: re, y: im }
    }
}

/// Oriented geodesic of the upper half-plane.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub enum Geodesic {
    /// Semicircle from `from` to `to` on the real line.
    Arc { from: f64, to: f64 },
    /// Vertical line through `x`, pointing up when `up`.
    Vertical { x: f64, up: bool },
}

impl Geodesic {
    pub fn reversed(&self) -> Geodesic {
        match *self {
            Geodesic::Arc { from, to } => Geodesic::Arc { from: to, to: from },
            Geodesic::Vertical { x, up } => Geodesic::Vertical { x, up: !up },
        }
    }

    /// Unoriented geodesic joining two boundary points, `None` meaning `∞`.
    pub fn through(u: Option<f64>, v: Option<f64>) -> Option<Geodesic> {
        match (u, v) {
            (Some(u), Some(v)) if u != v => Some(Geodesic::Arc { from: u, to: v }),
            (Some(x), None) | (None, Some(x)) => Some(Geodesic::Vertical { x, up: true }),
            _ => None,
        }
    }

    /// Intersection point with another geodesic, if they cross.
    pub fn intersect(&self, other: &Geodesic) -> Option<HPoint> {
        match (*self, *other) {
            (Geodesic::Vertical { .. }, Geodesic::Vertical { .. }) => None,
            (Geodesic::Vertical { x, .. }, Geodesic::Arc { from, to })
            | (Geodesic::Arc { from, to }, Geodesic::Vertical { x, .. }) => {
                let (c, r) = ((from + to) / 2.0, (from - to).abs() / 2.0);
                let h = r * r - (x - c) * (x - c);
                (h > 0.0).then(|| HPoint { x, y: h.sqrt() })
            }
            (Geodesic::Arc { from: a1, to: b1 }, Geodesic::Arc { from: a2, to: b2 }) => {
                let (c1, r1) = ((a1 + b1) / 2.0, (a1 - b1).abs() / 2.0);
                let (c2, r2) = ((a2 + b2) / 2.0, (a2 - b2).abs() / 2.0);
                if c1 == c2 {
                    return None;
                }
                let x = (r1 * r1 - r2 * r2 - c1 * c1 + c2 * c2) / (2.0 * (c2 - c1));
                let h = r1 * r1 - (x - c1) * (x - c1);
                (h > 0.0).then(|| HPoint { x, y: h.sqrt() })
            }
        }
    }
}

/// Oriented invariant geodesic of a hyperbolic matrix, tail to head.
#[derive(Clone, PartialEq, Debug)]
pub struct Axis {
    /// Attracting fixed point.
    pub head: QuadIrrational,
    /// Repelling fixed point.
    pub tail: QuadIrrational,
    pub geodesic: Geodesic,
}

/// `None` when `m` is not hyperbolic.
pub fn axis(m: &UnimodularMatrix) -> Option<Axis> {
    if !m.is_hyperbolic() {
        return None;
    }
    // c ≠ 0 for hyperbolic elements, so both ends are finite
    let head = attracting_fixed_point(m);
    let tail = head.conjugate();
    let geodesic = Geodesic::Arc {
        from: tail.to_f64(),
        to: head.to_f64(),
    };
    Some(Axis {
        head,
        tail,
        geodesic,
    })
}

/// Projective boundary point `p/q` with `q > 0`, or `q = 0, p = 1` for `∞`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Cusp {
    pub p: BigInt,
    pub q: BigInt,
}

impl Cusp {
    pub fn new(p: BigInt, q: BigInt) -> Self {
        assert!(!(p.is_zero() && q.is_zero()));
        if q.is_zero() {
            Cusp {
                p: BigInt::one(),
                q,
            }
        } else if q.is_negative() {
            Cusp { p: -p, q: -q }
        } else {
            Cusp { p, q }
        }
    }

    pub fn infinity() -> Self {
        Cusp {
            p: BigInt::one(),
            q: BigInt::zero(),
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        if self.q.is_zero() {
            None
        } else {
            Some(self.p.to_f64()? / self.q.to_f64()?)
        }
    }

    /// Image under the Möbius action of `m`.
    pub fn mobius(&self, m: &UnimodularMatrix) -> Cusp {
        Cusp::new(
            m.a() * &self.p + m.b() * &self.q,
            m.c() * &self.p + m.d() * &self.q,
        )
    }
}

/// Unordered edge of the Farey tessellation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FareyEdge(pub Cusp, pub Cusp);

impl FareyEdge {
    pub fn new(u: Cusp, v: Cusp) -> Self {
        if u <= v {
            FareyEdge(u, v)
        } else {
            FareyEdge(v, u)
        }
    }

    /// The edge `(0, ∞)`.
    pub fn base() -> Self {
        FareyEdge::new(Cusp::new(BigInt::zero(), BigInt::one()), Cusp::infinity())
    }

    pub fn mobius(&self, m: &UnimodularMatrix) -> Self {
        FareyEdge::new(self.0.mobius(m), self.1.mobius(m))
    }

    pub fn geodesic(&self) -> Option<Geodesic> {
        Geodesic::through(self.0.to_f64(), self.1.to_f64())
    }
}

/// Signs of `(q₁x − p₁)(q₂x − p₂) + q₁q₂y²`, negative inside the semicircle
/// over the edge.
fn side_value(e: &FareyEdge, z: &HPoint) -> Option<(f64, f64)> {
    let (p1, q1) = (e.0.p.to_f64()?, e.0.q.to_f64()?);
    let (p2, q2) = (e.1.p.to_f64()?, e.1.q.to_f64()?);
    let u = q1 * z.x - p1;
    let v = q2 * z.x - p2;
    let w = q1 * q2 * z.y * z.y;
    Some((u * v + w, u.abs() * v.abs() + w.abs()))
}

/// Same quantity at a cusp, times `q²`, in exact arithmetic.
fn side_sign_at(e: &FareyEdge, c: &Cusp) -> i8 {
    let v = (&e.0.q * &c.p - &e.0.p * &c.q) * (&e.1.q * &c.p - &e.1.p * &c.q);
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Ambiguous;

/// Farey edges crossed by the geodesic segment from `z0` to `x·z0`, in order.
/// `z0` must lie inside the triangle `(-1, 0, ∞)`. Fails when a point
/// comes within relative distance `tol` of an edge.
pub fn farey_walk(
    x: &UnimodularMatrix,
    z0: HPoint,
    tol: f64,
    max_steps: usize,
) -> Result<Vec<FareyEdge>, Ambiguous> {
    let target = z0.mobius(x);
    let mut tri = [
        Cusp::new(BigInt::from(-1), BigInt::one()),
        Cusp::new(BigInt::zero(), BigInt::one()),
        Cusp::infinity(),
    ];
    for k in 0..3 {
        let e = FareyEdge::new(tri[(k + 1) % 3].clone(), tri[(k + 2) % 3].clone());
        let (v, scale) = side_value(&e, &z0).ok_or(Ambiguous)?;
        if v.abs() <= tol * scale || (v > 0.0) != (side_sign_at(&e, &tri[k]) > 0) {
            return Err(Ambiguous);
        }
    }
    let mut entry: Option<FareyEdge> = None;
    let mut path = Vec::new();
    'walk: for _ in 0..max_steps {
        for k in 0..3 {
            let e = FareyEdge::new(tri[(k + 1) % 3].clone(), tri[(k + 2) % 3].clone());
            if entry.as_ref() == Some(&e) {
                continue;
            }
            let (v, scale) = side_value(&e, &target).ok_or(Ambiguous)?;
            if v.abs() <= tol * scale {
                return Err(Ambiguous);
            }
            let inside = side_sign_at(&e, &tri[k]) > 0;
            if (v > 0.0) != inside {
                // neighbour across e: third vertex is the Farey sum or difference
                let (u, w) = (&e.0, &e.1);
                let plus = Cusp::new(&u.p + &w.p, &u.q + &w.q);
                let minus = Cusp::new(&u.p - &w.p, &u.q - &w.q);
                let third = if plus == tri[k] { minus } else { plus };
                tri = [u.clone(), w.clone(), third];
                path.push(e.clone());
                entry = Some(e);
                continue 'walk;
            }
        }
        return Ok(path);
    }
    Err(Ambiguous)
}
