//! Three-type profiles for three projects and their validity conditions.

use serde::{Deserialize, Serialize};

use crate::engine::SortedColumns;
use crate::phantom::PhantomSystem;
use crate::{Division, Error, Profile, Result, SIMPLEX_TOL};

/// Slack on the phantom bounds; the engine's `t*` is only accurate to about
/// the sum tolerance.
pub const BOUND_TOL: f64 = 1e-8;

/// A voter's relation to an outcome `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoterClass {
    /// Reports exactly `x`.
    FullySatisfied,
    /// Reports the unit vector of the project.
    SingleMinded(usize),
    /// Reports `x_j` on `j`, `1 − x_j` on `k` and nothing elsewhere.
    DoubleMinded(usize, usize),
}

/// Classifies `row` against `x`, or `None` if it fits no class.
pub fn classify(row: &[f64], x: &[f64], tol: f64) -> Option<VoterClass> {
    let m = row.len();
    let eq = |a: f64, b: f64| (a - b).abs() <= tol;
    if row.iter().zip(x).all(|(&a, &b)| eq(a, b)) {
        return Some(VoterClass::FullySatisfied);
    }
    for j in 0..m {
        if (0..m).all(|k| eq(row[k], if k == j { 1.0 } else { 0.0 })) {
            return Some(VoterClass::SingleMinded(j));
        }
    }
    for j in 0..m {
        for k in (0..m).filter(|&k| k != j) {
            let fits = (0..m).all(|l| {
                let want = if l == j {
                    x[j]
                } else if l == k {
                    1.0 - x[j]
                } else {
                    0.0
                };
                eq(row[l], want)
            });
            if fits {
                return Some(VoterClass::DoubleMinded(j, k));
            }
        }
    }
    None
}

/// Counts of single-minded (`a`), double-minded (`b[j][k]`: `x_j` on `j`,
/// `1 − x_j` on `k`) and fully satisfied voters around an outcome `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeTypeProfile {
    pub x: Division,
    pub a: [usize; 3],
    pub b: [[usize; 3]; 3],
    pub n: usize,
}

impl ThreeTypeProfile {
    pub fn new(x: Division, a: [usize; 3], b: [[usize; 3]; 3], n: usize) -> Result<Self> {
        if x.m() != 3 {
            return Err(Error::ProjectCountMismatch { expected: "m = 3".into(), got: x.m() });
        }
        if (0..3).any(|j| b[j][j] != 0) {
            return Err(Error::InvalidProfile("double-minded counts need a zero diagonal".into()));
        }
        let t = Self { x, a, b, n };
        if t.big_a() + t.big_b() > n {
            return Err(Error::InvalidProfile(format!(
                "A + B = {} exceeds n = {n}",
                t.big_a() + t.big_b()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidProfile(format!("need at least 2 voters, got {n}")));
        }
        Ok(t)
    }

    pub fn big_a(&self) -> usize {
        self.a.iter().sum()
    }

    pub fn big_b(&self) -> usize {
        self.b.iter().flatten().sum()
    }

    /// Fully satisfied voters.
    pub fn c(&self) -> usize {
        self.n - self.big_a() - self.big_b()
    }

    /// `z_j = a_j + Σ_k b_{k,j}`: reports strictly above `x_j` in column `j`.
    pub fn z(&self, j: usize) -> usize {
        self.a[j] + (0..3).map(|k| self.b[k][j]).sum::<usize>()
    }

    /// `q_j = Σ_k b_{j,k}`: double-minded reports equal to `x_j`.
    pub fn q(&self, j: usize) -> usize {
        self.b[j].iter().sum()
    }

    pub fn expand(&self) -> Result<Profile> {
        let x = self.x.shares();
        let mut groups = vec![(self.x.clone(), self.c())];
        for j in 0..3 {
            for k in 0..3 {
                if self.b[j][k] > 0 {
                    let mut row = vec![0.0; 3];
                    row[j] = x[j];
                    row[k] = 1.0 - x[j];
                    groups.push((Division::new(row)?, self.b[j][k]));
                }
            }
        }
        for j in 0..3 {
            groups.push((Division::vertex(3, j)?, self.a[j]));
        }
        groups.retain(|(_, c)| *c > 0);
        Profile::from_groups(&groups)
    }

    /// Reads the counts off a profile whose rows all classify against `x`.
    pub fn from_profile(profile: &Profile, x: &Division, tol: f64) -> Option<Self> {
        if profile.m() != 3 || x.m() != 3 {
            return None;
        }
        let mut a = [0; 3];
        let mut b = [[0; 3]; 3];
        for row in profile.rows() {
            match classify(row, x.shares(), tol)? {
                VoterClass::FullySatisfied => {}
                VoterClass::SingleMinded(j) => a[j] += 1,
                VoterClass::DoubleMinded(j, k) => b[j][k] += 1,
            }
        }
        Self::new(x.clone(), a, b, profile.n()).ok()
    }
}

fn check(t: &ThreeTypeProfile, y: &PhantomSystem) -> Result<()> {
    if y.n() != t.n {
        return Err(Error::InvalidParameter(format!("phantom system built for n = {}, profile has {}", y.n(), t.n)));
    }
    Ok(())
}

fn sum_is_one(t: &ThreeTypeProfile, y: &PhantomSystem, time: f64) -> Result<bool> {
    let cols = SortedColumns::new(&t.expand()?);
    Ok((cols.sum(y, time) - 1.0).abs() <= SIMPLEX_TOL)
}

/// The phantom bounds for an all-positive outcome:
/// `y_{z_j}(t) ≤ x_j ≤ y_{z_j + q_j + C}(t)` for every project, and `S(t) = 1`.
pub fn three_type_valid(t: &ThreeTypeProfile, y: &PhantomSystem, time: f64) -> Result<bool> {
    check(t, y)?;
    let x = t.x.shares();
    if x.iter().any(|&v| v <= 0.0) {
        return Err(Error::Precondition("every x_j must be positive; use three_type_valid_zero".into()));
    }
    let c = t.c();
    let bounds = (0..3).all(|j| {
        let lower = y.value(t.z(j), time);
        let upper = y.value(t.z(j) + t.q(j) + c, time);
        lower <= x[j] + BOUND_TOL && x[j] <= upper + BOUND_TOL
    });
    Ok(bounds && sum_is_one(t, y, time)?)
}

/// The phantom bounds when `x₃ = 0`:
/// `y_{a₁+b₃₁}(t) ≤ x₁ ≤ y_{n−a₂−a₃−b₂₃−b₃₂}(t)`, the mirrored pair for `x₂`,
/// and `S(t) = 1` (which also pins the third median to zero).
pub fn three_type_valid_zero(t: &ThreeTypeProfile, y: &PhantomSystem, time: f64) -> Result<bool> {
    check(t, y)?;
    let x = t.x.shares();
    if x[2] != 0.0 || x[0] <= 0.0 || x[1] <= 0.0 {
        return Err(Error::Precondition(format!("need x₁, x₂ > 0 and x₃ = 0, got {x:?}")));
    }
    if time > 0.5 {
        return Err(Error::Precondition(format!("need t ≤ 1/2, got {time}")));
    }
    let (a, b, n) = (t.a, t.b, t.n);
    let lower = [a[0] + b[2][0], a[1] + b[2][1]];
    let upper = [n - a[1] - a[2] - b[1][2] - b[2][1], n - a[0] - a[2] - b[0][2] - b[2][0]];
    let bounds = (0..2).all(|j| {
        y.value(lower[j], time) <= x[j] + BOUND_TOL && x[j] <= y.value(upper[j], time) + BOUND_TOL
    });
    Ok(bounds && sum_is_one(t, y, time)?)
}
