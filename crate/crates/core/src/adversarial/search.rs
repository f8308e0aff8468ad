//! Pattern-stratified maximization of the relaxed loss.
//!
//! The program is split into strata by the sign of each `v̄_j − x_j` and, for
//! piecewise uniform phantoms, by the colour of the phantoms bounding each
//! project. Inside a stratum the outcome `x` is optimized exactly (the signed
//! objective is linear in `x` over a box cut by the simplex), and the counts
//! and time are explored by random restarts and coordinate hill climbing.
//! Every reported value is paired with an integer profile evaluated through
//! the engine.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::relaxed::{
    mean, phantom_label, relaxed_loss, q_of, sign_label, z_of, zero_indices, Colour, PhantomPattern, RelaxedThreeType, Sign,
    COUNTS, C_INDEX, PHANTOM_PATTERNS, POSITIVE_MIN,
};
use super::three_type::ThreeTypeProfile;
use crate::engine::{aggregate_sorted, uniform_phantom_m2, SortedColumns};
use crate::phantom::{relaxed_phantom, PhantomSystem};
use crate::{loss, rng, Division, Error, Profile, Result, SIMPLEX_TOL};

/// Largest scaled time `n t` explored for independent markets.
pub const IM_MAX_TIME: f64 = 16.0;
/// Denominators tried when rounding a relaxed point to voter counts.
pub const WITNESS_DENOMINATORS: [usize; 4] = [60, 600, 6000, 600_000];
/// Largest gap between a witness and the relaxed loss it stands for.
pub const WITNESS_TOL: f64 = 1e-3;

const SCALES: [f64; 6] = [0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const SWEEPS: usize = 3;
const STREAMS_PER_STRATUM: u64 = 1 << 20;
const PATTERN_TOL: f64 = 1e-12;
const VERTEX_TOL: f64 = 1e-12;

/// Phantom curve families the search understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "pu")]
    PiecewiseUniform,
    #[serde(rename = "im")]
    IndependentMarkets,
    /// Fixed phantoms `k/n` on two projects, embedded as `x₃ = 0`.
    #[serde(rename = "uniform")]
    UniformTwo,
}

impl Family {
    pub fn descriptor(self) -> &'static str {
        match self {
            Family::PiecewiseUniform => "pu",
            Family::IndependentMarkets => "im",
            Family::UniformTwo => "uniform",
        }
    }

    fn curve(self, x: f64, t: f64) -> f64 {
        match self {
            Family::PiecewiseUniform => relaxed_phantom(x, t),
            Family::IndependentMarkets => (x * t).min(1.0),
            Family::UniformTwo => x,
        }
    }

    fn active(self) -> &'static [usize] {
        match self {
            Family::UniformTwo => &[0, 1, C_INDEX],
            _ => &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
        }
    }

    /// Phantom system with `n` voters and the time matching a relaxed time.
    fn system(self, n: usize, t: f64) -> Result<(PhantomSystem, f64)> {
        match self {
            Family::PiecewiseUniform => Ok((PhantomSystem::piecewise_uniform(n)?, t)),
            Family::IndependentMarkets => Ok((PhantomSystem::independent_markets(n)?, (t / n as f64).min(1.0))),
            Family::UniformTwo => Ok((PhantomSystem::uniform(n)?, 0.0)),
        }
    }

    pub fn strata(self) -> Vec<Stratum> {
        use Sign::{Minus as M, Plus as P};
        let positive_signs = [[P, M, M], [P, P, M]];
        let zero_signs = [[M, P, P], [M, M, P]];
        let zero_patterns = [(Colour::Black, Colour::Red), (Colour::Red, Colour::Red)];
        let mut out = Vec::new();
        match self {
            Family::PiecewiseUniform => {
                for range in [(0.5, 1.0), (0.0, 0.5)] {
                    for signs in positive_signs {
                        for p in 0..27 {
                            let phantoms =
                                vec![PHANTOM_PATTERNS[p / 9], PHANTOM_PATTERNS[(p / 3) % 3], PHANTOM_PATTERNS[p % 3]];
                            out.push(Stratum { regime: Regime::Positive, signs, phantoms, t_range: range });
                        }
                    }
                }
                for signs in zero_signs {
                    for p1 in zero_patterns {
                        for p2 in zero_patterns {
                            out.push(Stratum { regime: Regime::Zero, signs, phantoms: vec![p1, p2], t_range: (0.0, 0.5) });
                        }
                    }
                }
            }
            Family::IndependentMarkets => {
                for signs in positive_signs {
                    out.push(Stratum { regime: Regime::Positive, signs, phantoms: vec![], t_range: (0.0, IM_MAX_TIME) });
                }
                for signs in zero_signs {
                    out.push(Stratum { regime: Regime::Zero, signs, phantoms: vec![], t_range: (0.0, IM_MAX_TIME) });
                }
            }
            Family::UniformTwo => {
                for signs in zero_signs {
                    out.push(Stratum { regime: Regime::Zero, signs, phantoms: vec![], t_range: (0.0, 0.0) });
                }
            }
        }
        out
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.descriptor())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pu" => Ok(Family::PiecewiseUniform),
            "im" => Ok(Family::IndependentMarkets),
            "uniform" => Ok(Family::UniformTwo),
            other => Err(Error::InvalidParameter(format!("no relaxed search for `{other}` (expected pu, im or uniform)"))),
        }
    }
}

/// Whether every outcome share is positive or the third one is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Positive,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub regime: Regime,
    pub signs: [Sign; 3],
    /// Required colours of the bounding phantoms; empty when not stratified.
    pub phantoms: Vec<PhantomPattern>,
    pub t_range: (f64, f64),
}

impl Stratum {
    pub fn label(&self) -> String {
        let mut s = sign_label(&self.signs);
        if !self.phantoms.is_empty() {
            s.push(' ');
            s.push_str(&phantom_label(&self.phantoms));
        }
        let (lo, hi) = self.t_range;
        match self.regime {
            Regime::Positive => s.push_str(&format!(" t∈[{lo},{hi}]")),
            Regime::Zero => s.push_str(&format!(" x3=0 t∈[{lo},{hi}]")),
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Eval {
    merit: f64,
    feasible: bool,
    objective: f64,
    loss: f64,
    x: [f64; 3],
}

fn infeasible(violation: f64) -> Eval {
    Eval { merit: -10.0 - violation, feasible: false, objective: f64::NEG_INFINITY, loss: 0.0, x: [0.0; 3] }
}

fn signed(c: &[f64; COUNTS], x: &[f64; 3], signs: &[Sign; 3]) -> f64 {
    (0..3).map(|j| signs[j].value() * (mean(c, x, j) - x[j])).sum()
}

fn relaxed_loss_raw(c: &[f64; COUNTS], x: &[f64; 3]) -> f64 {
    (0..3).map(|j| (mean(c, x, j) - x[j]).abs()).sum()
}

fn evaluate(family: Family, s: &Stratum, c: &[f64; COUNTS], t: f64) -> Eval {
    let mut violation = 0.0;
    let mut candidates: Vec<[f64; 3]> = Vec::with_capacity(12);
    match s.regime {
        Regime::Positive => {
            let mut lo = [0.0; 3];
            let mut hi = [0.0; 3];
            for j in 0..3 {
                let z = z_of(c, j);
                let top = (z + q_of(c, j) + c[C_INDEX]).min(1.0);
                if let Some(&(pl, pu)) = s.phantoms.get(j) {
                    violation += pl.violation(z) + pu.violation(top);
                }
                lo[j] = family.curve(z, t).max(POSITIVE_MIN);
                hi[j] = family.curve(top, t);
                violation += (lo[j] - hi[j]).max(0.0);
            }
            violation += (lo.iter().sum::<f64>() - 1.0).max(0.0) + (1.0 - hi.iter().sum::<f64>()).max(0.0);
            if violation > PATTERN_TOL {
                return infeasible(violation);
            }
            for free in 0..3 {
                let (g, h) = ((free + 1) % 3, (free + 2) % 3);
                for xg in [lo[g], hi[g]] {
                    for xh in [lo[h], hi[h]] {
                        let xf = 1.0 - xg - xh;
                        if xf >= lo[free] - VERTEX_TOL && xf <= hi[free] + VERTEX_TOL {
                            let mut x = [0.0; 3];
                            x[free] = xf.max(POSITIVE_MIN);
                            x[g] = xg;
                            x[h] = xh;
                            candidates.push(x);
                        }
                    }
                }
            }
        }
        Regime::Zero => {
            let (li, ui, z3) = zero_indices(c);
            for j in 0..2 {
                if let Some(&(pl, pu)) = s.phantoms.get(j) {
                    violation += pl.violation(li[j]) + pu.violation(ui[j]);
                }
            }
            violation += family.curve(z3, t).max(0.0);
            let lo = [family.curve(li[0], t).max(POSITIVE_MIN), family.curve(li[1], t).max(POSITIVE_MIN)];
            let hi = [family.curve(ui[0], t), family.curve(ui[1], t)];
            for j in 0..2 {
                violation += (lo[j] - hi[j]).max(0.0);
            }
            violation += (lo[0] + lo[1] - 1.0).max(0.0) + (1.0 - hi[0] - hi[1]).max(0.0);
            if violation > PATTERN_TOL {
                return infeasible(violation);
            }
            for j in 0..2 {
                for xj in [lo[j], hi[j]] {
                    let other = 1.0 - xj;
                    if other >= lo[1 - j] - VERTEX_TOL && other <= hi[1 - j] + VERTEX_TOL {
                        let mut x = [0.0; 3];
                        x[j] = xj;
                        x[1 - j] = other.max(POSITIVE_MIN);
                        candidates.push(x);
                    }
                }
            }
        }
    }
    let best = candidates
        .into_iter()
        .map(|x| (signed(c, &x, &s.signs), x))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    match best {
        Some((objective, x)) => Eval { merit: objective, feasible: true, objective, loss: relaxed_loss_raw(c, &x), x },
        None => infeasible(PATTERN_TOL),
    }
}

#[derive(Debug, Clone)]
struct State {
    c: [f64; COUNTS],
    t: f64,
    eval: Eval,
}

struct Climber<'a> {
    family: Family,
    stratum: &'a Stratum,
    quota: usize,
    used: usize,
}

impl Climber<'_> {
    fn eval(&mut self, c: &[f64; COUNTS], t: f64) -> Option<Eval> {
        if self.used >= self.quota {
            return None;
        }
        self.used += 1;
        Some(evaluate(self.family, self.stratum, c, t))
    }

    fn start<R: Rng>(&mut self, g: &mut R, restart: u64) -> Option<State> {
        let active = self.family.active();
        let draw = if restart.is_multiple_of(2) {
            rng::random_division(g, active.len())
        } else {
            let support = g.gen_range(1..=4.min(active.len()));
            rng::sparse_division(g, active.len(), support)
        };
        let mut c = [0.0; COUNTS];
        for (&i, v) in active.iter().zip(draw) {
            c[i] = v;
        }
        let (lo, hi) = self.stratum.t_range;
        let t = if hi > lo { g.gen_range(lo..=hi) } else { lo };
        let eval = self.eval(&c, t)?;
        Some(State { c, t, eval })
    }

    /// One first-improvement pass over every move at step `delta`. A move
    /// transfers mass between two counts, optionally nudging the time too.
    fn sweep(&mut self, s: &mut State, delta: f64) -> (bool, bool) {
        let active = self.family.active();
        let (lo, hi) = self.stratum.t_range;
        let dt = delta * (hi - lo);
        let nudges: &[f64] = if hi > lo { &[0.0, 1.0, -1.0] } else { &[0.0] };
        let mut improved = false;
        for &i in active {
            for &j in active {
                if i == j || s.c[i] <= 0.0 {
                    continue;
                }
                let amount = delta.min(s.c[i]);
                let mut c = s.c;
                c[i] -= amount;
                c[j] += amount;
                if amount == s.c[i] {
                    c[i] = 0.0;
                }
                for &nudge in nudges {
                    let t = (s.t + nudge * dt).clamp(lo, hi);
                    let Some(e) = self.eval(&c, t) else { return (improved, true) };
                    if e.merit > s.eval.merit {
                        *s = State { c, t, eval: e };
                        improved = true;
                        break;
                    }
                }
            }
        }
        if hi > lo {
            for dir in [1.0, -1.0] {
                let t = (s.t + dir * dt).clamp(lo, hi);
                if t == s.t {
                    continue;
                }
                let Some(e) = self.eval(&s.c, t) else { return (improved, true) };
                if e.merit > s.eval.merit {
                    *s = State { c: s.c, t, eval: e };
                    improved = true;
                }
            }
        }
        (improved, false)
    }

    fn climb(&mut self, mut s: State) -> State {
        for delta in SCALES {
            for _ in 0..SWEEPS {
                let (improved, exhausted) = self.sweep(&mut s, delta);
                if exhausted {
                    return s;
                }
                if !improved {
                    break;
                }
            }
        }
        s
    }
}

/// Best point found in one stratum.
#[derive(Debug, Clone)]
struct StratumBest {
    state: Option<State>,
    evaluations: usize,
}

fn search_stratum(family: Family, stratum: &Stratum, index: usize, quota: usize, seed: u64) -> StratumBest {
    let mut climber = Climber { family, stratum, quota, used: 0 };
    let mut best: Option<State> = None;
    let mut restart = 0u64;
    while climber.used < climber.quota {
        let mut g = rng::stream(seed, index as u64 * STREAMS_PER_STRATUM + restart);
        let Some(start) = climber.start(&mut g, restart) else { break };
        let end = climber.climb(start);
        if end.eval.feasible && best.as_ref().is_none_or(|b| end.eval.merit > b.eval.merit) {
            best = Some(end);
        }
        restart += 1;
    }
    StratumBest { state: best, evaluations: climber.used }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "OPTIMAL-candidate")]
    OptimalCandidate,
    #[serde(rename = "INFEASIBLE")]
    Infeasible,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::OptimalCandidate => "OPTIMAL-candidate",
            Status::Infeasible => "INFEASIBLE",
        })
    }
}

/// Denominator and engine loss of the integer profile backing a row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessRef {
    pub n: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumRow {
    pub index: usize,
    pub pattern: String,
    pub status: Status,
    /// Best value of the stratum's signed objective.
    pub objective: Option<f64>,
    /// Relaxed loss at that point.
    pub loss: Option<f64>,
    pub point: Option<RelaxedThreeType>,
    pub witness: Option<WitnessRef>,
    pub evaluations: usize,
}

/// An integer profile evaluated through the engine.
#[derive(Debug, Clone)]
pub struct Witness {
    pub n: usize,
    pub profile: Profile,
    pub three_type: ThreeTypeProfile,
    pub outcome: Division,
    pub tstar: Option<f64>,
    pub loss: f64,
    pub relaxed_loss: f64,
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub family: Family,
    pub budget: usize,
    pub seed: u64,
    pub rows: Vec<StratumRow>,
    pub best: Option<RelaxedThreeType>,
    pub best_loss: f64,
    pub best_stratum: Option<usize>,
    pub witness: Option<Witness>,
}

fn point_of(family: Family, s: &State) -> RelaxedThreeType {
    let x = Division::new(s.eval.x.to_vec()).expect("vertex lies on the simplex");
    let t = if family == Family::UniformTwo { 0.0 } else { s.t };
    RelaxedThreeType::from_counts(&s.c, x, t)
}

/// Largest-remainder rounding of fractions summing to one.
fn round_counts(c: &[f64; COUNTS], n: usize) -> [usize; COUNTS] {
    let mut out = [0usize; COUNTS];
    let mut rem: Vec<(f64, usize)> = Vec::with_capacity(COUNTS);
    let mut total = 0;
    for i in 0..COUNTS {
        let v = c[i].max(0.0) * n as f64;
        out[i] = v.floor() as usize;
        total += out[i];
        rem.push((v - v.floor(), i));
    }
    rem.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rem.iter().cycle().take(n.saturating_sub(total)) {
        out[i] += 1;
    }
    while out.iter().sum::<usize>() > n {
        let i = (0..COUNTS).max_by_key(|&i| out[i]).unwrap();
        out[i] -= 1;
    }
    out
}

/// Rounds a relaxed point to `n` voters and evaluates the result directly.
pub fn integer_witness(family: Family, r: &RelaxedThreeType, n: usize) -> Result<Witness> {
    let counts = round_counts(&r.counts(), n);
    let mut a = [0; 3];
    a.copy_from_slice(&counts[..3]);
    let pr = RelaxedThreeType::from_counts(&counts.map(|v| v as f64), r.x.clone(), r.t);
    let b = pr.b.map(|row| row.map(|v| v as usize));
    let three_type = ThreeTypeProfile::new(r.x.clone(), a, b, n)?;
    let full = three_type.expand()?;
    let (profile, outcome, tstar) = if family == Family::UniformTwo {
        let rows: Vec<Vec<f64>> = full.rows().map(|row| vec![row[0], row[1] + row[2]]).collect();
        let p = Profile::new(rows)?;
        let o = uniform_phantom_m2(&p)?;
        (p, o, None)
    } else {
        let (y, _) = family.system(n, r.t)?;
        let res = aggregate_sorted(&SortedColumns::new(&full), &y, SIMPLEX_TOL)?;
        (full, res.outcome, Some(res.tstar))
    };
    let l = loss(&profile, &outcome)?;
    Ok(Witness { n, profile, three_type, outcome, tstar, loss: l, relaxed_loss: relaxed_loss(r) })
}

fn first_witness(family: Family, r: &RelaxedThreeType, denominators: &[usize]) -> Option<Witness> {
    let target = relaxed_loss(r);
    denominators
        .iter()
        .filter_map(|&n| integer_witness(family, r, n).ok())
        .find(|w| (w.loss - target).abs() <= WITNESS_TOL)
}

fn run_strata(family: Family, budget: usize, seed: u64) -> (Vec<Stratum>, Vec<StratumBest>) {
    let strata = family.strata();
    let quota = (budget / strata.len()).max(1);
    let results = strata
        .par_iter()
        .enumerate()
        .map(|(i, s)| search_stratum(family, s, i, quota, seed))
        .collect();
    (strata, results)
}

/// Maximizes the relaxed loss over every stratum with `budget` evaluations
/// in total, and witnesses the best point with an integer profile.
pub fn search_max_loss(family: Family, budget: usize, seed: u64) -> Result<SearchReport> {
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let (strata, results) = run_strata(family, budget, seed);
    let small = &WITNESS_DENOMINATORS[..3];
    let rows: Vec<StratumRow> = strata
        .par_iter()
        .zip(results.par_iter())
        .enumerate()
        .map(|(index, (s, b))| {
            let point = b.state.as_ref().map(|st| point_of(family, st));
            let witness = point
                .as_ref()
                .and_then(|p| first_witness(family, p, small))
                .map(|w| WitnessRef { n: w.n, loss: w.loss });
            StratumRow {
                index,
                pattern: s.label(),
                status: if point.is_some() { Status::OptimalCandidate } else { Status::Infeasible },
                objective: b.state.as_ref().map(|st| st.eval.objective),
                loss: b.state.as_ref().map(|st| st.eval.loss),
                point,
                witness,
                evaluations: b.evaluations,
            }
        })
        .collect();
    let mut best_stratum = None;
    let mut best_loss = 0.0;
    for row in &rows {
        if let Some(l) = row.loss {
            if best_stratum.is_none() || l > best_loss {
                best_loss = l;
                best_stratum = Some(row.index);
            }
        }
    }
    let best = best_stratum.and_then(|i| rows[i].point.clone());
    let witness = best.as_ref().and_then(|p| first_witness(family, p, &WITNESS_DENOMINATORS));
    Ok(SearchReport { family, budget, seed, rows, best, best_loss, best_stratum, witness })
}

/// Looks for an integer profile whose engine loss exceeds `threshold`.
pub fn falsify_upper_bound(family: Family, threshold: f64, budget: usize, seed: u64) -> Result<Option<Witness>> {
    if !(threshold > 0.0 && threshold < 2.0) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 2), got {threshold}")));
    }
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let (_, results) = run_strata(family, budget, seed);
    let mut candidates: Vec<(f64, usize, RelaxedThreeType)> = results
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.state.as_ref().map(|st| (st.eval.loss, i, point_of(family, st))))
        .filter(|(l, _, _)| *l > threshold)
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, _, r) in candidates {
        for &n in &WITNESS_DENOMINATORS {
            if let Ok(w) = integer_witness(family, &r, n) {
                if w.loss > threshold {
                    return Ok(Some(w));
                }
            }
        }
    }
    Ok(None)
}
