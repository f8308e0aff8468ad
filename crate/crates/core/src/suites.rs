//! Seeded property suites.
//!
//! Each trial draws from its own stream `rng::stream(seed, trial)` and the
//! trials run in parallel; a suite passes when no trial reports a violation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversarial::escalate::ESCALATE_TOL;
use crate::adversarial::{classify, escalate, three_type_valid, ThreeTypeProfile};
use crate::engine::{aggregate_sorted, feasibility_sum, uniform_sum_check, SortedColumns};
use crate::phantom::{PhantomSystem, SystemKind, DEFAULT_EPSILON};
use crate::{l1_distance, proportional_division, rng, Division, Error, Profile, Result, SIMPLEX_TOL};

/// Slack allowed when comparing a deviation's utility with the truthful one.
pub const TRUTHFUL_SLACK: f64 = 1e-7;
const RANDOM_DEVIATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Truthful,
    Proportional,
    Feasibility,
    UniformSum,
    Equivalence,
    Escalation,
    ValidityOracle,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Truthful,
        Suite::Proportional,
        Suite::Feasibility,
        Suite::UniformSum,
        Suite::Equivalence,
        Suite::Escalation,
        Suite::ValidityOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Truthful => "truthful",
            Suite::Proportional => "proportional",
            Suite::Feasibility => "feasibility",
            Suite::UniformSum => "uniform-sum",
            Suite::Equivalence => "equivalence",
            Suite::Escalation => "escalation",
            Suite::ValidityOracle => "validity-oracle",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Suite::Truthful | Suite::Proportional | Suite::Feasibility => 1000,
            Suite::UniformSum | Suite::Equivalence | Suite::Escalation => 500,
            Suite::ValidityOracle => 2000,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown suite `{s}` (expected one of {})",
                Suite::ALL.map(|x| x.name()).join(", ")
            ))
        })
    }
}

/// A failing trial with the instance that broke it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub detail: String,
    pub profile: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    /// Individual comparisons made across all trials.
    pub checks: usize,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

type Trial = std::result::Result<usize, Violation>;

fn violation(trial: usize, profile: &Profile, detail: String) -> Violation {
    Violation { trial, detail, profile: profile.to_rows() }
}

fn random_profile<R: Rng>(g: &mut R, n: usize, m: usize) -> Result<Profile> {
    let rows = (0..n)
        .map(|_| match g.gen_range(0..3) {
            0 => rng::grid_division(g, m, 8),
            1 => {
                let support = g.gen_range(1..=m);
                rng::sparse_division(g, m, support)
            }
            _ => rng::random_division(g, m),
        })
        .collect();
    Profile::new(rows)
}

/// All divisions of `m` projects on the grid of step `1/steps`.
pub fn grid_divisions(m: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, steps: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == m - 1 {
            cur.push(left as f64 / steps as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k as f64 / steps as f64);
            rec(m, left - k, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, steps, steps, &mut Vec::with_capacity(m), &mut out);
    out
}

/// The fixed part of the deviation set: the step-1/8 grid, seeded random
/// divisions and unit vectors.
pub fn deviation_set<R: Rng>(g: &mut R, m: usize) -> Vec<Vec<f64>> {
    let mut out = grid_divisions(m, 8);
    out.extend((0..RANDOM_DEVIATIONS).map(|_| rng::random_division(g, m)));
    out.extend((0..m).map(|j| rng::unit_vector(m, j)));
    out
}

/// Reports that agree with `f` on one project and put the rest on another.
pub fn double_minded_deviations(f: &[f64]) -> Vec<Vec<f64>> {
    let m = f.len();
    let mut out = Vec::new();
    for j in 0..m {
        for k in (0..m).filter(|&k| k != j) {
            let mut d = vec![0.0; m];
            d[j] = f[j];
            d[k] = 1.0 - f[j];
            out.push(d);
        }
    }
    out
}

fn outcome(profile: &Profile, y: &PhantomSystem) -> Result<Division> {
    Ok(aggregate_sorted(&SortedColumns::new(profile), y, SIMPLEX_TOL)?.outcome)
}

const TRUTHFUL_KINDS: [SystemKind; 3] = [
    SystemKind::PiecewiseUniform,
    SystemKind::PiecewiseUniformPrime { epsilon: DEFAULT_EPSILON },
    SystemKind::IndependentMarkets,
];

fn truthful_trial(trial: usize, seed: u64) -> Result<Trial> {
    let mut g = rng::stream(seed, trial as u64);
    let n = g.gen_range(2..=5);
    let m = g.gen_range(2..=4);
    let profile = random_profile(&mut g, n, m)?;
    let fixed = deviation_set(&mut g, m);
    let mut checks = 0;
    for kind in TRUTHFUL_KINDS {
        let y = PhantomSystem::new(kind, n)?;
        let f = outcome(&profile, &y)?;
        let mut devs = fixed.clone();
        devs.extend(double_minded_deviations(f.shares()));
        for i in 0..n {
            let truth = profile.division(i);
            let honest = l1_distance(&truth, &f)?;
            for d in &devs {
                let lie = Division::new(d.clone())?;
                let g2 = outcome(&profile.with_vote(i, &lie)?, &y)?;
                let gained = l1_distance(&truth, &g2)?;
                checks += 1;
                if gained < honest - TRUTHFUL_SLACK {
                    return Ok(Err(violation(
                        trial,
                        &profile,
                        format!("{kind}: voter {i} reporting {d:?} moves the distance from {honest} to {gained}"),
                    )));
                }
            }
        }
    }
    Ok(Ok(checks))
}

fn proportional_trial(trial: usize, seed: u64) -> Result<Trial> {
    let mut g = rng::stream(seed, trial as u64);
    let n = g.gen_range(2..=12);
    let m = 3;
    let rows = (0..n).map(|_| rng::unit_vector(m, g.gen_range(0..m))).collect();
    let profile = Profile::new(rows)?;
    let f = outcome(&profile, &PhantomSystem::piecewise_uniform(n)?)?;
    let p = proportional_division(&profile);
    let d = l1_distance(&f, &p)?;
    if d > 1e-9 {
        return Ok(Err(violation(trial, &profile, format!("outcome {:?} differs from {:?} by {d}", f.shares(), p.shares()))));
    }
    Ok(Ok(1))
}

fn feasibility_trial(trial: usize, seed: u64) -> Result<Trial> {
    let mut g = rng::stream(seed, trial as u64);
    let n = g.gen_range(2..=10);
    let m = g.gen_range(2..=5);
    let profile = random_profile(&mut g, n, m)?;
    let mut checks = 0;
    for kind in TRUTHFUL_KINDS {
        let y = PhantomSystem::new(kind, n)?;
        let r = aggregate_sorted(&SortedColumns::new(&profile), &y, SIMPLEX_TOL)?;
        let s = feasibility_sum(&profile, &y, r.tstar)?;
        let total: f64 = r.outcome.shares().iter().sum();
        checks += 1;
        if (s - 1.0).abs() > SIMPLEX_TOL || (total - 1.0).abs() > SIMPLEX_TOL || !(0.0..=1.0).contains(&r.tstar) {
            return Ok(Err(violation(trial, &profile, format!("{kind}: S({}) = {s}, outcome sums to {total}", r.tstar))));
        }
    }
    Ok(Ok(checks))
}

fn uniform_sum_trial(trial: usize, seed: u64) -> Result<Trial> {
    let mut g = rng::stream(seed, trial as u64);
    let n = g.gen_range(2..=10);
    let m = g.gen_range(3..=5);
    let profile = random_profile(&mut g, n, m)?;
    let s = uniform_sum_check(&profile)?;
    if s < 1.0 - SIMPLEX_TOL {
        return Ok(Err(violation(trial, &profile, format!("uniform phantom medians sum to {s}"))));
    }
    Ok(Ok(1))
}

fn equivalence_trial(trial: usize, seed: u64) -> Result<Trial> {
    let mut g = rng::stream(seed, trial as u64);
    let n = g.gen_range(2..=10);
    let m = g.gen_range(2..=5);
    let profile = random_profile(&mut g, n, m)?;
    let a = outcome(&profile, &PhantomSystem::piecewise_uniform(n)?)?;
    let b = outcome(&profile, &PhantomSystem::piecewise_uniform_prime(n, DEFAULT_EPSILON)?)?;
    let worst = a.shares().iter().zip(b.shares()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if worst > 1e-6 {
        return Ok(Err(violation(trial, &profile, format!("outcomes {:?} and {:?} differ by {worst}", a.shares(), b.shares()))));
    }
    Ok(Ok(1))
}

fn escalation_trial(trial: usize, seed: u64) -> Result<Trial> {
    let mut g = rng::stream(seed, trial as u64);
    let n = g.gen_range(2..=6);
    let profile = random_profile(&mut g, n, 3)?;
    let y = PhantomSystem::piecewise_uniform(n)?;
    let e = match escalate(&profile, &y) {
        Ok(e) => e,
        Err(err) => return Ok(Err(violation(trial, &profile, err.to_string()))),
    };
    if e.loss < e.initial_loss - 1e-9 {
        return Ok(Err(violation(trial, &profile, format!("loss fell from {} to {}", e.initial_loss, e.loss))));
    }
    let f = outcome(&e.profile, &y)?;
    if let Some(i) = (0..n).find(|&i| classify(e.profile.row(i), f.shares(), ESCALATE_TOL).is_none()) {
        return Ok(Err(violation(trial, &profile, format!("voter {i} of the result is not three-type"))));
    }
    Ok(Ok(1))
}

/// A random integer three-type profile with `n ≤ 8` and every `x_j ≥ 1/8`.
fn validity_instance(trial: usize, seed: u64) -> Result<(ThreeTypeProfile, PhantomSystem)> {
    let mut g = rng::stream(seed, trial as u64);
    let n = g.gen_range(2..=8);
    let x = loop {
        let x = rng::grid_division(&mut g, 3, 8);
        if x.iter().all(|&v| v > 0.0) {
            break Division::new(x)?;
        }
    };
    let mut cells = [0usize; 10];
    for _ in 0..n {
        cells[g.gen_range(0..10)] += 1;
    }
    let a = [cells[0], cells[1], cells[2]];
    let b = [[0, cells[3], cells[4]], [cells[5], 0, cells[6]], [cells[7], cells[8], 0]];
    let kind = if trial.is_multiple_of(2) { SystemKind::PiecewiseUniform } else { SystemKind::IndependentMarkets };
    Ok((ThreeTypeProfile::new(x, a, b, n)?, PhantomSystem::new(kind, n)?))
}

fn validity_trial(trial: usize, seed: u64) -> Result<Trial> {
    let (t, y) = validity_instance(trial, seed)?;
    let x = t.x.clone();
    let kind = y.kind();
    let profile = t.expand()?;
    let r = aggregate_sorted(&SortedColumns::new(&profile), &y, SIMPLEX_TOL)?;
    let direct = l1_distance(&r.outcome, &x)? <= 1e-6;
    let oracle = three_type_valid(&t, &y, r.tstar)?;
    if direct != oracle {
        return Ok(Err(violation(
            trial,
            &profile,
            format!("{kind}: bounds say {oracle}, aggregation gives {:?} for x = {:?}", r.outcome.shares(), x.shares()),
        )));
    }
    Ok(Ok(1))
}

/// Runs `suite` for `trials` seeded trials.
pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> Result<SuiteReport> {
    let f: fn(usize, u64) -> Result<Trial> = match suite {
        Suite::Truthful => truthful_trial,
        Suite::Proportional => proportional_trial,
        Suite::Feasibility => feasibility_trial,
        Suite::UniformSum => uniform_sum_trial,
        Suite::Equivalence => equivalence_trial,
        Suite::Escalation => escalation_trial,
        Suite::ValidityOracle => validity_trial,
    };
    let results: Vec<Trial> = (0..trials).into_par_iter().map(|i| f(i, seed)).collect::<Result<_>>()?;
    let mut checks = 0;
    let mut violations = Vec::new();
    for r in results {
        match r {
            Ok(c) => checks += c,
            Err(v) => violations.push(v),
        }
    }
    Ok(SuiteReport { suite, trials, seed, checks, pass: violations.is_empty(), violations })
}

/// Number of validity-oracle trials whose profile reproduces its own `x`.
pub fn validity_positives(trials: usize, seed: u64) -> Result<usize> {
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<bool> {
            let (t, y) = validity_instance(trial, seed)?;
            let r = aggregate_sorted(&SortedColumns::new(&t.expand()?), &y, SIMPLEX_TOL)?;
            Ok(l1_distance(&r.outcome, &t.x)? <= 1e-6)
        })
        .collect::<Result<_>>()?;
    Ok(hits.into_iter().filter(|&h| h).count())
}
