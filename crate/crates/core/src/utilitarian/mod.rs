//! The utilitarian aggregator: a division minimizing the total ℓ1 distance to
//! all reports.
//!
//! `Σ_i Σ_j |v_ij − x_j|` is linearized with one slack `s_ij ≥ |v_ij − x_j|`
//! per entry. Optima are rarely unique (any median-like point of a column
//! works), so the returned division is the lexicographically smallest point
//! of the optimal face.

pub mod lp;

use serde::{Deserialize, Serialize};

use crate::division::l1_slices;
use crate::{Division, Error, Profile, Result};
use lp::{Constraint, LpError, Sense};

/// Slack granted to each already-optimized objective during refinement.
const FACE_TOL: f64 = 1e-9;
const UNIQUE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialCostSolution {
    pub outcome: Division,
    pub social_cost: f64,
    /// The optimal face is a single point.
    pub unique: bool,
}

/// `Σ_i ‖v_i − x‖₁`.
pub fn social_cost(profile: &Profile, x: &Division) -> Result<f64> {
    if x.m() != profile.m() {
        return Err(Error::DimensionMismatch { expected: profile.m(), got: x.m() });
    }
    profile.rows().map(|r| l1_slices(r, x.shares())).sum()
}

#[derive(Clone)]
struct Program {
    m: usize,
    num_vars: usize,
    constraints: Vec<Constraint>,
}

impl Program {
    fn new(profile: &Profile) -> Self {
        let (n, m) = (profile.n(), profile.m());
        let mut constraints = Vec::with_capacity(2 * n * m + 1);
        for (i, row) in profile.rows().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let s = m + i * m + j;
                constraints.push(Constraint { coeffs: vec![(s, 1.0), (j, -1.0)], sense: Sense::Ge, rhs: -v });
                constraints.push(Constraint { coeffs: vec![(s, 1.0), (j, 1.0)], sense: Sense::Ge, rhs: v });
            }
        }
        constraints.push(Constraint { coeffs: (0..m).map(|j| (j, 1.0)).collect(), sense: Sense::Eq, rhs: 1.0 });
        Self { m, num_vars: m + n * m, constraints }
    }

    fn solve(&self, cost: &[f64]) -> Result<lp::LpSolution> {
        lp::minimize(self.num_vars, cost, &self.constraints).map_err(|e| match e {
            LpError::Infeasible => Error::NoConvergence("social cost program reported infeasible".into()),
            LpError::Unbounded => Error::NoConvergence("social cost program reported unbounded".into()),
            LpError::IterationLimit => Error::NoConvergence("simplex iteration limit".into()),
        })
    }

    fn cost_vector(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars];
        c[self.m..].iter_mut().for_each(|v| *v = 1.0);
        c
    }

    fn fix(&mut self, cost: &[f64], value: f64) {
        let coeffs = cost.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(j, &c)| (j, c)).collect();
        self.constraints.push(Constraint { coeffs, sense: Sense::Le, rhs: value + FACE_TOL });
    }

    /// Lexicographic extreme of the current feasible set in the `x` block;
    /// `sign = 1` minimizes, `sign = −1` maximizes.
    fn lex_extreme(mut self, sign: f64) -> Result<Vec<f64>> {
        let mut last = None;
        for j in 0..self.m {
            let mut c = vec![0.0; self.num_vars];
            c[j] = sign;
            let sol = self.solve(&c)?;
            self.fix(&c, sol.objective);
            last = Some(sol.x);
        }
        Ok(last.expect("m ≥ 2")[..self.m].to_vec())
    }
}

/// The lexicographically smallest social-cost minimizer.
pub fn utilitarian_outcome(profile: &Profile) -> Result<SocialCostSolution> {
    let mut program = Program::new(profile);
    let cost = program.cost_vector();
    let best = program.solve(&cost)?;
    program.fix(&cost, best.objective);
    let low = program.clone().lex_extreme(1.0)?;
    let high = program.lex_extreme(-1.0)?;
    let unique = low.iter().zip(&high).all(|(a, b)| (a - b).abs() <= UNIQUE_TOL);
    let raw = Division::new(low.iter().map(|v| v.max(0.0)).collect())?;
    let raw_cost = social_cost(profile, &raw)?;
    let outcome = match polish(profile, &low) {
        Some(p) if social_cost(profile, &p)? <= raw_cost + 1e-12 => p,
        _ => raw,
    };
    let social_cost = social_cost(profile, &outcome)?;
    Ok(SocialCostSolution { outcome, social_cost, unique })
}

/// Removes the drift left by the refinement tolerances.
///
/// Optimal vertices put every coordinate but at most one on a reported share
/// (or a simplex bound), so coordinates within `SNAP_TOL` of such a value are
/// snapped to it and a single remaining coordinate takes up the rest.
fn polish(profile: &Profile, x: &[f64]) -> Option<Division> {
    const SNAP_TOL: f64 = 1e-7;
    let mut snapped: Vec<Option<f64>> = x
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            profile
                .rows()
                .map(|r| r[j])
                .chain([0.0, 1.0])
                .filter(|v| (v - xj).abs() <= SNAP_TOL)
                .min_by(|a, b| (a - xj).abs().total_cmp(&(b - xj).abs()))
        })
        .collect();
    let free: Vec<usize> = (0..x.len()).filter(|&j| snapped[j].is_none()).collect();
    match free.as_slice() {
        [] => {}
        [j] => {
            let rest: f64 = snapped.iter().flatten().sum();
            snapped[*j] = Some(1.0 - rest);
        }
        _ => return None,
    }
    Division::new(snapped.into_iter().map(|v| v.unwrap_or(0.0)).collect()).ok()
}
