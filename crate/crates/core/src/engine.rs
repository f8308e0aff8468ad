//! Evaluation of moving phantom mechanisms.

use serde::{Deserialize, Serialize};

use crate::phantom::PhantomSystem;
use crate::{Division, Error, Profile, Result, SIMPLEX_TOL};

const WIDTH_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub outcome: Division,
    pub tstar: f64,
    pub sum_at_tstar: f64,
    pub iterations: usize,
}

/// The `(n+1)`-th smallest of the `2n + 1` pooled values.
pub fn median_with_phantoms(column: &[f64], phantoms: &[f64]) -> Result<f64> {
    if phantoms.len() != column.len() + 1 {
        return Err(Error::DimensionMismatch { expected: column.len() + 1, got: phantoms.len() });
    }
    let mut pool: Vec<f64> = column.iter().chain(phantoms).copied().collect();
    let mid = column.len();
    let (_, median, _) = pool.select_nth_unstable_by(mid, f64::total_cmp);
    Ok(*median)
}

/// Profile columns sorted once, so that each median costs `O(log n)` phantom
/// evaluations.
#[derive(Debug, Clone)]
pub struct SortedColumns {
    n: usize,
    columns: Vec<Vec<f64>>,
}

impl SortedColumns {
    pub fn new(profile: &Profile) -> Self {
        let columns = (0..profile.m())
            .map(|j| {
                let mut c = profile.column(j);
                c.sort_unstable_by(f64::total_cmp);
                c
            })
            .collect();
        Self { n: profile.n(), columns }
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Median of column `j` against the phantoms `y(t)`.
    ///
    /// Selects the `(n+1)`-th element of the merge of two sorted sequences by
    /// binary search over how many of them come from the column.
    pub fn median(&self, j: usize, y: &PhantomSystem, t: f64) -> f64 {
        let a = &self.columns[j];
        let n = self.n;
        let b = |k: usize| y.value(k, t);
        let rank = n + 1;
        let (mut lo, mut hi) = (0usize, n);
        loop {
            let i = (lo + hi) / 2;
            let k = rank - i;
            if i < n && k > 0 && b(k - 1) > a[i] {
                lo = i + 1;
            } else if i > 0 && k <= n && a[i - 1] > b(k) {
                hi = i - 1;
            } else {
                let from_a = if i > 0 { a[i - 1] } else { f64::NEG_INFINITY };
                let from_b = if k > 0 { b(k - 1) } else { f64::NEG_INFINITY };
                return from_a.max(from_b);
            }
        }
    }

    pub fn medians(&self, y: &PhantomSystem, t: f64) -> Vec<f64> {
        (0..self.m()).map(|j| self.median(j, y, t)).collect()
    }

    pub fn sum(&self, y: &PhantomSystem, t: f64) -> f64 {
        (0..self.m()).map(|j| self.median(j, y, t)).sum()
    }
}

fn check_system(profile: &Profile, y: &PhantomSystem) -> Result<()> {
    if y.n() != profile.n() {
        return Err(Error::InvalidParameter(format!(
            "phantom system built for n = {}, profile has n = {}",
            y.n(),
            profile.n()
        )));
    }
    Ok(())
}

/// `S(t) = Σ_j med(column j, y(t))`.
pub fn feasibility_sum(profile: &Profile, y: &PhantomSystem, t: f64) -> Result<f64> {
    check_system(profile, y)?;
    Ok(SortedColumns::new(profile).sum(y, t))
}

/// A root of `S(t) = 1` with the number of sum evaluations spent on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub t: f64,
    pub sum: f64,
    pub iterations: usize,
}

/// Finds `t` with `|S(t) − 1| ≤ tol` on pre-sorted columns.
///
/// Alternates bisection with false-position steps: `S` is piecewise linear, so
/// the secant lands on the root once the bracket sits inside one piece, while
/// the bisection steps keep the bracket shrinking geometrically.
pub fn solve_sorted(cols: &SortedColumns, y: &PhantomSystem, tol: f64) -> Result<Root> {
    let s = |t: f64| cols.sum(y, t);
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut s_lo, mut s_hi) = (s(lo), s(hi));
    let mut iterations = 2;
    if (s_lo - 1.0).abs() <= tol {
        return Ok(Root { t: lo, sum: s_lo, iterations });
    }
    if (s_hi - 1.0).abs() <= tol {
        return Ok(Root { t: hi, sum: s_hi, iterations });
    }
    if s_lo > 1.0 || s_hi < 1.0 {
        return Err(Error::BracketViolated { system: y.kind().to_string(), low: s_lo, high: s_hi });
    }
    let mut width_reached = false;
    while iterations < MAX_ITERATIONS {
        let secant = iterations % 2 == 0 || width_reached;
        let mut t = if secant { lo + (1.0 - s_lo) * (hi - lo) / (s_hi - s_lo) } else { 0.5 * (lo + hi) };
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
            if !(t > lo && t < hi) {
                break;
            }
        }
        let v = s(t);
        iterations += 1;
        if (v - 1.0).abs() <= tol {
            let (lo, s_lo, hi, s_hi) = if v < 1.0 { (t, v, hi, s_hi) } else { (lo, s_lo, t, v) };
            return Ok(polish(&s, Root { t, sum: v, iterations }, (lo, s_lo), (hi, s_hi)));
        }
        if v < 1.0 {
            lo = t;
            s_lo = v;
        } else {
            hi = t;
            s_hi = v;
        }
        // Past the width target only secant steps are taken; on a linear
        // piece they converge in one or two evaluations.
        if hi - lo <= WIDTH_TOL {
            width_reached = true;
        }
    }
    let (t, sum) = if (s_lo - 1.0).abs() <= (s_hi - 1.0).abs() { (lo, s_lo) } else { (hi, s_hi) };
    if (sum - 1.0).abs() <= tol {
        Ok(Root { t, sum, iterations })
    } else {
        Err(Error::NoConvergence(format!(
            "S(t) stuck at {sum} after {iterations} evaluations (bracket [{lo}, {hi}])"
        )))
    }
}

/// A few extra secant steps inside the final bracket. The accepted root is
/// already within tolerance; this only removes the residual so that outcomes
/// are accurate well below it.
fn polish(s: &dyn Fn(f64) -> f64, mut best: Root, mut lo: (f64, f64), mut hi: (f64, f64)) -> Root {
    for _ in 0..3 {
        if best.sum == 1.0 || hi.1 <= lo.1 {
            break;
        }
        let t = lo.0 + (1.0 - lo.1) * (hi.0 - lo.0) / (hi.1 - lo.1);
        if !(t >= lo.0 && t <= hi.0) {
            break;
        }
        let v = s(t);
        best.iterations += 1;
        if (v - 1.0).abs() < (best.sum - 1.0).abs() {
            best.t = t;
            best.sum = v;
        }
        if v < 1.0 {
            lo = (t, v);
        } else {
            hi = (t, v);
        }
    }
    best
}

/// A time `t*` with `|S(t*) − 1| ≤ tol`.
pub fn solve_tstar(profile: &Profile, y: &PhantomSystem, tol: f64) -> Result<f64> {
    check_system(profile, y)?;
    Ok(solve_sorted(&SortedColumns::new(profile), y, tol)?.t)
}

/// The interval `[t_lo, t_hi]` of times where `|S(t) − 1| ≤ tol`, each end
/// located by bisection to width `1e-12`.
pub fn tstar_interval(profile: &Profile, y: &PhantomSystem, tol: f64) -> Result<(f64, f64)> {
    check_system(profile, y)?;
    let cols = SortedColumns::new(profile);
    let root = solve_sorted(&cols, y, tol)?;
    let s = |t: f64| cols.sum(y, t);
    let edge = |mut inside: f64, mut outside: f64| {
        for _ in 0..MAX_ITERATIONS {
            if (inside - outside).abs() <= WIDTH_TOL {
                break;
            }
            let mid = 0.5 * (inside + outside);
            if (s(mid) - 1.0).abs() <= tol {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let t_lo = if (s(0.0) - 1.0).abs() <= tol { 0.0 } else { edge(root.t, 0.0) };
    let t_hi = if (s(1.0) - 1.0).abs() <= tol { 1.0 } else { edge(root.t, 1.0) };
    Ok((t_lo, t_hi))
}

/// Runs the moving phantom mechanism with the default sum tolerance.
pub fn aggregate(profile: &Profile, y: &PhantomSystem) -> Result<AggregationResult> {
    aggregate_with_tol(profile, y, SIMPLEX_TOL)
}

pub fn aggregate_with_tol(profile: &Profile, y: &PhantomSystem, tol: f64) -> Result<AggregationResult> {
    check_system(profile, y)?;
    aggregate_sorted(&SortedColumns::new(profile), y, tol)
}

pub fn aggregate_sorted(cols: &SortedColumns, y: &PhantomSystem, tol: f64) -> Result<AggregationResult> {
    let root = solve_sorted(cols, y, tol)?;
    let medians = cols.medians(y, root.t);
    let outcome = renormalize(medians, root.sum)?;
    Ok(AggregationResult { outcome, tstar: root.t, sum_at_tstar: root.sum, iterations: root.iterations })
}

fn renormalize(mut medians: Vec<f64>, sum: f64) -> Result<Division> {
    if sum > 0.0 {
        medians.iter_mut().for_each(|v| *v /= sum);
    }
    Division::new(medians)
}

/// The uniform phantom mechanism for two projects, where the fixed phantoms
/// `k/n` already give medians summing to one.
pub fn uniform_phantom_m2(profile: &Profile) -> Result<Division> {
    if profile.m() != 2 {
        return Err(Error::ProjectCountMismatch { expected: "m = 2".into(), got: profile.m() });
    }
    let y = PhantomSystem::uniform(profile.n())?;
    let cols = SortedColumns::new(profile);
    let medians = cols.medians(&y, 0.0);
    let sum = medians[0] + medians[1];
    renormalize(medians, sum)
}

/// Sum of the uniform phantom medians for `m ≥ 3`; never below one.
pub fn uniform_sum_check(profile: &Profile) -> Result<f64> {
    if profile.m() < 3 {
        return Err(Error::ProjectCountMismatch { expected: "m ≥ 3".into(), got: profile.m() });
    }
    let y = PhantomSystem::uniform(profile.n())?;
    Ok(SortedColumns::new(profile).sum(&y, 0.0))
}
