//! The continuous relaxation of three-type profiles.
//!
//! Voter counts become fractions of the electorate and phantom indices become
//! index fractions, so validity turns into box constraints on `x` whose ends
//! are relaxed phantom values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::phantom::relaxed_phantom;
use crate::{Division, SIMPLEX_TOL};

/// Smallest admissible share when every outcome coordinate must be positive.
pub const POSITIVE_MIN: f64 = 1e-9;

/// Layout of the count vector: `â₁, â₂, â₃, b̂₁₂, b̂₁₃, b̂₂₁, b̂₂₃, b̂₃₁, b̂₃₂, Ĉ`.
pub const COUNTS: usize = 10;
pub const C_INDEX: usize = 9;
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colour {
    #[serde(rename = "b")]
    Black,
    #[serde(rename = "r")]
    Red,
}

impl Colour {
    /// Colour of the relaxed phantom at index fraction `x`.
    pub fn of(x: f64) -> Self {
        if x <= 0.5 {
            Colour::Black
        } else {
            Colour::Red
        }
    }

    /// How far `x` is from having this colour.
    pub fn violation(self, x: f64) -> f64 {
        match self {
            Colour::Black => (x - 0.5).max(0.0),
            Colour::Red => (0.5 - x).max(0.0),
        }
    }
}

/// Colours of the phantoms bounding one project from below and above.
pub type PhantomPattern = (Colour, Colour);

pub const PHANTOM_PATTERNS: [PhantomPattern; 3] =
    [(Colour::Black, Colour::Black), (Colour::Black, Colour::Red), (Colour::Red, Colour::Red)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternPair {
    pub signs: [Sign; 3],
    pub phantoms: [PhantomPattern; 3],
}

impl PatternPair {
    /// Sign patterns that are not all equal; the rest force zero loss.
    pub fn mixed(signs: [Sign; 3]) -> bool {
        signs.iter().any(|&s| s != signs[0])
    }
}

pub fn sign_label(signs: &[Sign]) -> String {
    signs.iter().map(|s| if *s == Sign::Plus { '+' } else { '-' }).collect()
}

pub fn phantom_label(p: &[PhantomPattern]) -> String {
    let c = |c: Colour| if c == Colour::Black { 'b' } else { 'r' };
    p.iter().map(|(l, u)| format!("({},{})", c(*l), c(*u))).collect::<Vec<_>>().join(",")
}

impl fmt::Display for PatternPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", sign_label(&self.signs), phantom_label(&self.phantoms))
    }
}

/// A point of the relaxed program: fractional counts, outcome and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedThreeType {
    pub x: Division,
    pub a: [f64; 3],
    /// `b[j][k]`: fraction reporting `x_j` on `j` and `1 − x_j` on `k`.
    pub b: [[f64; 3]; 3],
    /// Time of the phantom curves (the scaled time `n t` for independent markets).
    pub t: f64,
}

impl RelaxedThreeType {
    pub fn from_counts(counts: &[f64; COUNTS], x: Division, t: f64) -> Self {
        let mut b = [[0.0; 3]; 3];
        for (i, &(j, k)) in PAIRS.iter().enumerate() {
            b[j][k] = counts[3 + i];
        }
        Self { x, a: [counts[0], counts[1], counts[2]], b, t }
    }

    pub fn counts(&self) -> [f64; COUNTS] {
        let mut c = [0.0; COUNTS];
        c[..3].copy_from_slice(&self.a);
        for (i, &(j, k)) in PAIRS.iter().enumerate() {
            c[3 + i] = self.b[j][k];
        }
        c[C_INDEX] = self.c();
        c
    }

    pub fn big_a(&self) -> f64 {
        self.a.iter().sum()
    }

    pub fn big_b(&self) -> f64 {
        self.b.iter().flatten().sum()
    }

    pub fn c(&self) -> f64 {
        1.0 - self.big_a() - self.big_b()
    }

    pub fn z(&self, j: usize) -> f64 {
        self.a[j] + (0..3).map(|k| self.b[k][j]).sum::<f64>()
    }

    pub fn q(&self, j: usize) -> f64 {
        self.b[j].iter().sum()
    }

    /// `v̄_j = â_j + Σ_k (1 − x_k) b̂_{k,j} + x_j (Ĉ + q̂_j)`.
    pub fn mean(&self, j: usize) -> f64 {
        mean(&self.counts(), self.x.shares(), j)
    }

    fn counts_valid(&self) -> bool {
        let c = self.counts();
        c.iter().all(|&v| v >= -SIMPLEX_TOL) && self.c() >= -SIMPLEX_TOL
    }
}

#[inline]
pub(crate) fn z_of(c: &[f64; COUNTS], j: usize) -> f64 {
    c[j] + PAIRS.iter().enumerate().filter(|(_, p)| p.1 == j).map(|(i, _)| c[3 + i]).sum::<f64>()
}

#[inline]
pub(crate) fn q_of(c: &[f64; COUNTS], j: usize) -> f64 {
    PAIRS.iter().enumerate().filter(|(_, p)| p.0 == j).map(|(i, _)| c[3 + i]).sum()
}

#[inline]
pub(crate) fn b_of(c: &[f64; COUNTS], j: usize, k: usize) -> f64 {
    PAIRS.iter().position(|&p| p == (j, k)).map_or(0.0, |i| c[3 + i])
}

#[inline]
pub(crate) fn mean(c: &[f64; COUNTS], x: &[f64], j: usize) -> f64 {
    let from_others: f64 =
        PAIRS.iter().enumerate().filter(|(_, p)| p.1 == j).map(|(i, p)| (1.0 - x[p.0]) * c[3 + i]).sum();
    c[j] + from_others + x[j] * (c[C_INDEX] + q_of(c, j))
}

/// `Σ_j |v̄_j − x_j|`.
pub fn relaxed_loss(r: &RelaxedThreeType) -> f64 {
    let c = r.counts();
    let x = r.x.shares();
    (0..3).map(|j| (mean(&c, x, j) - x[j]).abs()).sum()
}

/// Piecewise uniform validity with every share positive:
/// `ŷ(ẑ_j, t) ≤ x_j ≤ ŷ(ẑ_j + q̂_j + Ĉ, t)`.
pub fn relaxed_feasible(r: &RelaxedThreeType) -> bool {
    let x = r.x.shares();
    if !r.counts_valid() || !(0.0..=1.0).contains(&r.t) || x.iter().any(|&v| v <= 0.0) {
        return false;
    }
    let c = r.c();
    (0..3).all(|j| {
        let lower = relaxed_phantom(r.z(j), r.t);
        let upper = relaxed_phantom((r.z(j) + r.q(j) + c).min(1.0), r.t);
        lower <= x[j] + SIMPLEX_TOL && x[j] <= upper + SIMPLEX_TOL
    })
}

/// Piecewise uniform validity for `x₃ = 0`, `t ≤ 1/2`.
pub fn relaxed_feasible_zero(r: &RelaxedThreeType) -> bool {
    let x = r.x.shares();
    if !r.counts_valid() || !(0.0..=0.5).contains(&r.t) || x[2] != 0.0 || x[0] <= 0.0 || x[1] <= 0.0 {
        return false;
    }
    let (lo, hi, z3) = zero_indices(&r.counts());
    relaxed_phantom(z3, r.t) <= 0.0
        && (0..2).all(|j| {
            relaxed_phantom(lo[j], r.t) <= x[j] + SIMPLEX_TOL && x[j] <= relaxed_phantom(hi[j], r.t) + SIMPLEX_TOL
        })
}

/// Index fractions bounding `x₁`, `x₂` when `x₃ = 0`, and the index of the
/// lowest phantom that must sit at zero for the third median to vanish.
pub(crate) fn zero_indices(c: &[f64; COUNTS]) -> ([f64; 2], [f64; 2], f64) {
    let lo = [c[0] + b_of(c, 2, 0), c[1] + b_of(c, 2, 1)];
    let hi = [
        (1.0 - c[1] - c[2] - b_of(c, 1, 2) - b_of(c, 2, 1)).max(0.0),
        (1.0 - c[0] - c[2] - b_of(c, 0, 2) - b_of(c, 2, 0)).max(0.0),
    ];
    let z3 = c[2] + b_of(c, 0, 2) + b_of(c, 1, 2);
    (lo, hi, z3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn point(a: [f64; 3], b: [[f64; 3]; 3], x: [f64; 3], t: f64) -> RelaxedThreeType {
        RelaxedThreeType { x: Division::new(x.to_vec()).unwrap(), a, b, t }
    }

    #[test]
    fn all_satisfied_has_zero_loss() {
        let r = point([0.0; 3], [[0.0; 3]; 3], [0.2, 0.3, 0.5], 0.7);
        assert_eq!(relaxed_loss(&r), 0.0);
    }

    #[test]
    fn pu_two_thirds_limit() {
        let third = 1.0 / 3.0;
        let r = point([0.5, 0.0, 0.0], [[0.0; 3]; 3], [third; 3], 5.0 / 6.0);
        assert!((relaxed_loss(&r) - 2.0 / 3.0).abs() < 1e-12);
        assert!(relaxed_feasible(&r));
        // Just before the binding time the lower phantoms cannot reach 1/3.
        let early = point([0.5, 0.0, 0.0], [[0.0; 3]; 3], [third; 3], 0.8);
        assert!(!relaxed_feasible(&early));
    }

    #[test]
    fn im_limit_point() {
        let rho = 2.0 - 2f64.sqrt();
        let rest = 1.0 - 2f64.sqrt() / 2.0;
        let r = point([rho, 0.0, 0.0], [[0.0; 3]; 3], [2f64.sqrt() - 1.0, rest, rest], 0.0);
        assert!((relaxed_loss(&r) - (12.0 - 8.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn infeasible_points() {
        let r = point([0.0; 3], [[0.0; 3]; 3], [1.0, 0.0, 0.0], 0.9);
        assert!(!relaxed_feasible(&r));
        let r = point([0.6, 0.3, 0.3], [[0.0; 3]; 3], [0.4, 0.3, 0.3], 0.9);
        assert!(!relaxed_feasible(&r));
    }

    #[test]
    fn zero_regime_feasibility() {
        // Half the voters on project 1, half on (1/2, 1/2, 0); t = 1/2 puts the
        // top phantom at 1 and the middle one at 0.
        let r = point([0.25, 0.25, 0.0], [[0.0; 3]; 3], [0.5, 0.5, 0.0], 0.5);
        assert!(relaxed_feasible_zero(&r));
        let late = point([0.25, 0.25, 0.0], [[0.0; 3]; 3], [0.5, 0.5, 0.0], 0.6);
        assert!(!relaxed_feasible_zero(&late));
    }

    #[test]
    fn means_balance_the_outcome() {
        let mut g = rng::stream(3, 0);
        for _ in 0..500 {
            let support = 1 + (g.next_u32() % 10) as usize;
            let c = rng::sparse_division(&mut g, COUNTS, support);
            let x = rng::random_division(&mut g, 3);
            let counts: [f64; COUNTS] = c.try_into().unwrap();
            let r = RelaxedThreeType::from_counts(&counts, Division::new(x.clone()).unwrap(), 0.5);
            let s: f64 = (0..3).map(|j| r.mean(j) - x[j]).sum();
            assert!(s.abs() < 1e-12);
            assert!((r.c() - counts[C_INDEX]).abs() < 1e-12);
        }
    }

    use rand::RngCore;

    #[test]
    fn labels() {
        let p = PatternPair {
            signs: [Sign::Plus, Sign::Minus, Sign::Minus],
            phantoms: [PHANTOM_PATTERNS[1], PHANTOM_PATTERNS[0], PHANTOM_PATTERNS[0]],
        };
        assert_eq!(p.to_string(), "+-- (b,r),(b,b),(b,b)");
        assert!(PatternPair::mixed(p.signs));
        assert!(!PatternPair::mixed([Sign::Plus; 3]));
    }
}
