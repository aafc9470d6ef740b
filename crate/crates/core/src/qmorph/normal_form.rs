//! Normal forms in PSL(2,Z) = ⟨S⟩ ∗ ⟨U⟩ with `S = (0 -1; 1 0)` of order two
//! and `U = ST = (0 -1; 1 1)` of order three.
//!
//! A normal form alternates `S` with `U` or `U²`. Read left to right it is the
//! path in the dual tree of the Farey tessellation from the base triangle
//! `(-1, 0, ∞)` to its image: every `S` crosses one Farey edge, every `U^e`
//! picks which of the two remaining sides is crossed next.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::sl2core::{Lr, LrWord, UnimodularMatrix};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Letter {
    S,
    U,
    U2,
}

impl Letter {
    fn u_exp(self) -> Option<u8> {
        match self {
            Letter::S => None,
            Letter::U => Some(1),
            Letter::U2 => Some(2),
        }
    }

    fn from_u_exp(e: u8) -> Option<Letter> {
        match e % 3 {
            1 => Some(Letter::U),
            2 => Some(Letter::U2),
            _ => None,
        }
    }

    pub fn inverse(self) -> Letter {
        match self {
            Letter::S => Letter::S,
            Letter::U => Letter::U2,
            Letter::U2 => Letter::U,
        }
    }

    pub fn matrix(self) -> UnimodularMatrix {
        let u = UnimodularMatrix::from_i64(0, -1, 1, 1).unwrap();
        match self {
            Letter::S => UnimodularMatrix::s(),
            Letter::U => u,
            Letter::U2 => &u * &u,
        }
    }
}

/// Reduced word in `S`, `U`, `U²`; the identity of PSL(2,Z) is the empty word.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct NormalForm(pub Vec<Letter>);

impl NormalForm {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Appends with free-product cancellation.
    pub fn push(&mut self, x: Letter) {
        match (self.0.last().copied(), x) {
            (Some(Letter::S), Letter::S) => {
                self.0.pop();
            }
            (Some(top), _) if top.u_exp().is_some() && x.u_exp().is_some() => {
                let e = top.u_exp().unwrap() + x.u_exp().unwrap();
                self.0.pop();
                if let Some(l) = Letter::from_u_exp(e) {
                    self.0.push(l);
                }
            }
            _ => self.0.push(x),
        }
    }

    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut nf = NormalForm::default();
        for l in letters {
            nf.push(l);
        }
        nf
    }

    /// Normal form of `±g`.
    pub fn of(g: &UnimodularMatrix) -> Self {
        let mut nf = NormalForm::default();
        let push_t = |nf: &mut NormalForm, k: &BigInt| {
            let n = k.abs().to_u64().expect("T-exponent fits u64");
            for _ in 0..n {
                if k.is_positive() {
                    nf.push(Letter::S);
                    nf.push(Letter::U);
                } else {
                    nf.push(Letter::U2);
                    nf.push(Letter::S);
                }
            }
        };
        let (mut a, mut b, mut c, mut d) =
            (g.a().clone(), g.b().clone(), g.c().clone(), g.d().clone());
        loop {
            if c.is_zero() {
                // (±1 b; 0 ±1) = ±T^{ab}
                push_t(&mut nf, &(&a * &b));
                break;
            }
            // g = T^q · S · g'
            let q = nearest_div(&a, &c);
            let a1 = &a - &q * &c;
            let b1 = &b - &q * &d;
            push_t(&mut nf, &q);
            nf.push(Letter::S);
            let (na, nb, nc, nd) = (c, d, -a1, -b1);
            a = na;
            b = nb;
            c = nc;
            d = nd;
        }
        nf
    }

    pub fn matrix(&self) -> UnimodularMatrix {
        self.0
            .iter()
            .fold(UnimodularMatrix::identity(), |acc, l| &acc * &l.matrix())
    }

    pub fn inverse(&self) -> Self {
        NormalForm(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Conjugate of `self` that is cyclically reduced: its square is reduced
    /// by plain concatenation. Elliptic classes end up with at most one letter.
    pub fn cyclic_reduction(&self) -> Self {
        let mut w: std::collections::VecDeque<Letter> = self.0.iter().copied().collect();
        while w.len() >= 2 {
            let f = *w.front().unwrap();
            let l = *w.back().unwrap();
            match (f.u_exp(), l.u_exp()) {
                (None, None) => {
                    w.pop_front();
                    w.pop_back();
                }
                (Some(ef), Some(el)) => {
                    w.pop_back();
                    w.pop_front();
                    if let Some(x) = Letter::from_u_exp(ef + el) {
                        w.push_front(x);
                    }
                }
                _ => break,
            }
        }
        // rotate so an S comes first
        if w.len() >= 2 && w[0] != Letter::S {
            w.rotate_left(1);
        }
        NormalForm(w.into_iter().collect())
    }

    /// Occurrences of `pattern` as a contiguous subword.
    pub fn count(&self, pattern: &[Letter]) -> usize {
        if pattern.is_empty() || pattern.len() > self.0.len() {
            return 0;
        }
        self.0
            .windows(pattern.len())
            .filter(|w| *w == pattern)
            .count()
    }

    /// Occurrences of `pattern` per period in the bi-infinite power of `self`;
    /// `self` must be cyclically reduced.
    pub fn count_cyclic(&self, pattern: &[Letter]) -> usize {
        let n = self.0.len();
        if n < 2 || pattern.is_empty() {
            return 0;
        }
        (0..n)
            .filter(|&i| {
                pattern
                    .iter()
                    .enumerate()
                    .all(|(j, &p)| self.0[(i + j) % n] == p)
            })
            .count()
    }

    /// Prefixes of `self` standing just before each `S`: the Farey edges
    /// crossed are these prefixes applied to the edge `(0, ∞)`.
    pub fn crossing_prefixes(&self) -> Vec<UnimodularMatrix> {
        let mut out = Vec::new();
        let mut acc = UnimodularMatrix::identity();
        for l in &self.0 {
            if *l == Letter::S {
                out.push(acc.clone());
            }
            acc = &acc * &l.matrix();
        }
        out
    }
}

fn nearest_div(a: &BigInt, c: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    // floor((2a + c)/(2c)) rounds a/c to nearest
    let (num, den) = if c.is_negative() {
        (-(a * &two) - c, -(c * &two))
    } else {
        (a * &two + c, c * &two)
    };
    num.div_floor(&den)
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(match l {
                Letter::S => "S",
                Letter::U => "U",
                Letter::U2 => "U2",
            })?;
        }
        Ok(())
    }
}

/// `R = T = S·U` and `L = S·U²` in PSL(2,Z).
pub fn letters_of_lr(word: &LrWord) -> Vec<Letter> {
    word.0
        .iter()
        .flat_map(|l| match l {
            Lr::R => [Letter::S, Letter::U],
            Lr::L => [Letter::S, Letter::U2],
        })
        .collect()
}

#[cfg(test)]
fn same_in_psl(x: &UnimodularMatrix, y: &UnimodularMatrix) -> bool {
    x == y || *x == y.neg()
}
