//! Rewriting a three-project profile into three-type form without lowering
//! its loss.
//!
//! Each step takes the first voter that is not single-minded, double-minded
//! or fully satisfied with respect to the current outcome, picks a pair of
//! projects and moves part of the voter's budget between them. Moves that
//! push the report away from the outcome raise the loss; the remaining ones
//! snap the voter onto one of the three classes.

use serde::{Deserialize, Serialize};

use super::three_type::classify;
use crate::engine::{aggregate_sorted, SortedColumns};
use crate::phantom::PhantomSystem;
use crate::{loss, proportional_division, Division, Error, Profile, Result, SIMPLEX_TOL};

/// Tolerance for classifying voters and comparing shares.
pub const ESCALATE_TOL: f64 = 1e-9;
/// Largest loss drop a move may cause before it is rejected.
pub const LOSS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveKind {
    /// Mass moved from `k` to `j` with `f_j ≤ v_ij`, `v_ik ≤ f_k`.
    ShiftAway,
    /// A report with nothing left on `k` turned single-minded on `j`.
    ToSingleMinded,
    /// A report with nothing left on `k` turned double-minded.
    ToDoubleMinded,
    /// Mass moved from `j` to `k` when the means sit on the other side.
    ShiftToward,
    ToFullySatisfied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub voter: usize,
    pub kind: MoveKind,
    pub pair: (usize, usize),
    pub epsilon: f64,
    pub loss_before: f64,
    pub loss_after: f64,
}

#[derive(Debug, Clone)]
pub struct EscalationOutcome {
    pub profile: Profile,
    pub outcome: Division,
    pub initial_loss: f64,
    pub loss: f64,
    pub moves: Vec<Move>,
}

fn evaluate(profile: &Profile, y: &PhantomSystem) -> Result<(Division, f64)> {
    let r = aggregate_sorted(&SortedColumns::new(profile), y, SIMPLEX_TOL)?;
    let l = loss(profile, &r.outcome)?;
    Ok((r.outcome, l))
}

type Candidate = (MoveKind, (usize, usize), f64, Vec<f64>);

/// Candidate rewrites of voter `v` against outcome `f` and means `mean`, in
/// the order the pairs are enumerated.
fn candidates(v: &[f64], f: &[f64], mean: &[f64]) -> Vec<Candidate> {
    let tol = ESCALATE_TOL;
    let mut out = Vec::new();
    for j in 0..3 {
        for k in (0..3).filter(|&k| k != j) {
            let other = 3 - j - k;
            if f[j] <= v[j].min(mean[j]) + tol && f[k] + tol >= v[k].max(mean[k]) {
                let mut w = v.to_vec();
                if v[k] > tol {
                    w[j] += v[k];
                    w[k] = 0.0;
                    out.push((MoveKind::ShiftAway, (j, k), v[k], w));
                } else if v[other] <= f[other] + tol {
                    w = vec![0.0; 3];
                    w[j] = 1.0;
                    out.push((MoveKind::ToSingleMinded, (j, k), v[other], w));
                } else {
                    w = vec![0.0; 3];
                    w[other] = f[other];
                    w[j] = 1.0 - f[other];
                    out.push((MoveKind::ToDoubleMinded, (j, k), v[other] - f[other], w));
                }
            }
            if mean[j] <= f[j] + tol && f[j] <= v[j] + tol && v[k] <= f[k] + tol && f[k] <= mean[k] + tol {
                let eps = (v[j] - f[j]).min(f[k] - v[k]);
                if eps > tol {
                    let mut w = v.to_vec();
                    w[j] -= eps;
                    w[k] += eps;
                    out.push((MoveKind::ShiftToward, (j, k), eps, w));
                } else {
                    out.push((MoveKind::ToFullySatisfied, (j, k), 0.0, f.to_vec()));
                }
            }
        }
    }
    out
}

/// Rewrites `profile` until every voter is single-minded, double-minded or
/// fully satisfied with respect to the outcome, never lowering the loss by
/// more than [`LOSS_SLACK`] per move. Gives up after `10 n` moves.
pub fn escalate(profile: &Profile, y: &PhantomSystem) -> Result<EscalationOutcome> {
    if profile.m() != 3 {
        return Err(Error::ProjectCountMismatch { expected: "3".into(), got: profile.m() });
    }
    if y.n() != profile.n() {
        return Err(Error::InvalidParameter(format!(
            "phantom system built for n = {}, profile has {}",
            y.n(),
            profile.n()
        )));
    }
    let cap = 10 * profile.n();
    let mut current = profile.clone();
    let (mut outcome, initial_loss) = evaluate(&current, y)?;
    let mut current_loss = initial_loss;
    let mut moves = Vec::new();
    loop {
        let f = outcome.shares().to_vec();
        let Some(i) = (0..current.n()).find(|&i| classify(current.row(i), &f, ESCALATE_TOL).is_none()) else {
            return Ok(EscalationOutcome { profile: current, outcome, initial_loss, loss: current_loss, moves });
        };
        if moves.len() >= cap {
            return Err(Error::NoConvergence(format!(
                "escalation still has unclassified voter {i} after {cap} moves"
            )));
        }
        let mean = proportional_division(&current).into_shares();
        let mut accepted = None;
        for (kind, pair, epsilon, row) in candidates(current.row(i), &f, &mean) {
            let next = current.with_vote(i, &Division::new(row)?)?;
            let (o, l) = evaluate(&next, y)?;
            if l >= current_loss - LOSS_SLACK {
                accepted = Some((next, o, l, Move { voter: i, kind, pair, epsilon, loss_before: current_loss, loss_after: l }));
                break;
            }
        }
        let Some((next, o, l, mv)) = accepted else {
            return Err(Error::NoConvergence(format!("no loss-preserving move for voter {i}")));
        };
        current = next;
        outcome = o;
        current_loss = l;
        moves.push(mv);
    }
}
