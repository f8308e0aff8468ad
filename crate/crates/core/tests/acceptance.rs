//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use phantom_core::adversarial::search::{falsify_upper_bound, search_max_loss, Family, WITNESS_TOL};
use phantom_core::constructions::{build, ConstructionSpec, Theorem};
use phantom_core::engine::{aggregate, feasibility_sum, tstar_interval, uniform_phantom_m2};
use phantom_core::suites::{grid_divisions, run_suite, validity_positives, Suite};
use phantom_core::utilitarian::{social_cost, utilitarian_outcome};
use phantom_core::{l1_distance, loss, Division, Mechanism, PhantomSystem, Profile, SystemKind};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn worked_example() -> Check {
    let y = PhantomSystem::piecewise_uniform(5).map_err(e)?;
    let a = Profile::new(vec![
        vec![0.375, 0.375, 0.25],
        vec![0.375, 0.375, 0.25],
        vec![0.125, 0.5, 0.375],
        vec![0.4375, 0.5625, 0.0],
        vec![0.625, 0.0625, 0.3125],
    ])
    .map_err(e)?;
    let ra = aggregate(&a, &y).map_err(e)?;
    ensure(close(ra.outcome.shares(), &[0.375, 0.375, 0.25], 1e-6), format!("(a) gave {:?}", ra.outcome.shares()))?;
    let b = Profile::new(vec![
        vec![1.0, 0.0, 0.0],
        vec![0.5, 0.5, 0.0],
        vec![0.0, 2.0 / 3.0, 1.0 / 3.0],
        vec![1.0 / 3.0, 5.0 / 9.0, 1.0 / 9.0],
        vec![0.375, 0.375, 0.25],
    ])
    .map_err(e)?;
    let rb = aggregate(&b, &y).map_err(e)?;
    let s = feasibility_sum(&b, &y, rb.tstar).map_err(e)?;
    ensure((s - 1.0).abs() <= 1e-9, format!("(b) S(t*) = {s}"))?;
    let (lo, hi) = tstar_interval(&b, &y, 1e-9).map_err(e)?;
    let t = 49.0 / 64.0;
    ensure(lo - 1e-6 <= t && t <= hi + 1e-6, format!("(b) t* interval [{lo}, {hi}]"))?;
    Ok(format!("(a) {:?}, (b) {:?} with t* in [{lo:.6}, {hi:.6}]", ra.outcome.shares(), rb.outcome.shares()))
}

fn two_projects() -> Check {
    let grid: Vec<Vec<f64>> = grid_divisions(2, 8);
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 2..=4usize {
        let mut idx = vec![0usize; n];
        loop {
            let p = Profile::new(idx.iter().map(|&i| grid[i].clone()).collect()).map_err(e)?;
            let o = uniform_phantom_m2(&p).map_err(e)?;
            worst = worst.max(loss(&p, &o).map_err(e)?);
            count += 1;
            // Nondecreasing index tuples enumerate each multiset once.
            let Some(k) = (0..n).rev().find(|&k| idx[k] + 1 < grid.len()) else { break };
            let v = idx[k] + 1;
            for slot in &mut idx[k..] {
                *slot = v;
            }
        }
    }
    ensure(worst <= 0.5 + 1e-9, format!("max grid loss {worst}"))?;
    let w = Profile::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).map_err(e)?;
    let lw = loss(&w, &uniform_phantom_m2(&w).map_err(e)?).map_err(e)?;
    ensure((lw - 0.5).abs() <= 1e-12, format!("witness loss {lw}"))?;
    Ok(format!("{count} grid profiles, max loss {worst}, witness loss {lw}"))
}

fn proportionality() -> Check {
    let r = run_suite(Suite::Proportional, 1000, 0).map_err(e)?;
    ensure(r.pass, format!("{:?}", r.violations.first()))?;
    Ok(format!("{} single-minded profiles match the mean", r.trials))
}

fn phantom_lower_bound() -> Check {
    for m in 2..=5 {
        let c = build(&ConstructionSpec::new(Theorem::PhantomLb, Some(m), Some(6)).map_err(e)?).map_err(e)?;
        for kind in [SystemKind::PiecewiseUniform, SystemKind::IndependentMarkets] {
            let r = Mechanism::Phantom(kind).run(&c.profile).map_err(e)?;
            let want = vec![1.0 / m as f64; m];
            ensure(close(r.outcome.shares(), &want, 1e-9), format!("{kind} m={m}: {:?}", r.outcome.shares()))?;
            let target = 1.0 - 1.0 / m as f64;
            ensure((r.loss - target).abs() <= 1e-9, format!("{kind} m={m}: loss {}", r.loss))?;
        }
    }
    Ok("uniform outcome and loss 1 - 1/m for m = 2..5 under pu and im".into())
}

fn im_lower_bound() -> Check {
    let limit = 12.0 - 8.0 * 2f64.sqrt();
    let run = |n: usize| -> Result<f64, String> {
        let c = build(&ConstructionSpec::new(Theorem::ImLb, None, Some(n)).map_err(e)?).map_err(e)?;
        Ok(Mechanism::Phantom(SystemKind::IndependentMarkets).run(&c.profile).map_err(e)?.loss)
    };
    let l20 = run(20_000)?;
    ensure(l20 >= 0.6862, format!("n = 20000 loss {l20}"))?;
    let gaps: Vec<f64> = [1_000, 10_000, 100_000].into_iter().map(|n| run(n).map(|l| (l - limit).abs())).collect::<Result<_, _>>()?;
    ensure(gaps[2] <= 1e-3, format!("gap at n = 1e5 is {}", gaps[2]))?;
    Ok(format!("n = 20000 loss {l20:.6}; gaps to 12 - 8√2: {:.2e}, {:.2e}, {:.2e}", gaps[0], gaps[1], gaps[2]))
}

fn proportional_lower_bound() -> Check {
    let m = 1000usize;
    let c = build(&ConstructionSpec::new(Theorem::PropLb, Some(m), None).map_err(e)?).map_err(e)?;
    // m^{2/3} = 100 exactly, so z = 900 and a = 100².
    let (z, a) = (900.0, 10_000.0);
    let target = 2.0 * (a / (a + z)) * (z / m as f64);
    let floor = 2.0 - 8.0 / (m as f64).cbrt();
    let mut out = Vec::new();
    for kind in [SystemKind::PiecewiseUniform, SystemKind::IndependentMarkets] {
        let l = Mechanism::Phantom(kind).run(&c.profile).map_err(e)?.loss;
        ensure((l - target).abs() <= 1e-9, format!("{kind}: loss {l}, want {target}"))?;
        ensure(l >= floor, format!("{kind}: loss {l} below {floor}"))?;
        out.push(format!("{kind} {l:.9}"));
    }
    Ok(format!("{} (bound {floor})", out.join(", ")))
}

fn utilitarian_lower_bound() -> Check {
    for m in 3..=10usize {
        let c = build(&ConstructionSpec::new(Theorem::UtilLb, Some(m), None).map_err(e)?).map_err(e)?;
        let sol = utilitarian_outcome(&c.profile).map_err(e)?;
        let mut e1 = vec![0.0; m];
        e1[0] = 1.0;
        ensure(close(sol.outcome.shares(), &e1, 1e-9), format!("m={m}: {:?}", sol.outcome.shares()))?;
        let l = loss(&c.profile, &sol.outcome).map_err(e)?;
        let target = 2.0 - 4.0 / (m as f64 + 1.0);
        ensure((l - target).abs() <= 1e-9, format!("m={m}: loss {l}"))?;
    }
    let c = build(&ConstructionSpec::new(Theorem::UtilLb, Some(3), None).map_err(e)?).map_err(e)?;
    let sol = utilitarian_outcome(&c.profile).map_err(e)?;
    let mut best = f64::INFINITY;
    for d in grid_divisions(3, 64) {
        best = best.min(social_cost(&c.profile, &Division::new(d).map_err(e)?).map_err(e)?);
    }
    ensure((sol.social_cost - best).abs() <= 1e-9, format!("lp cost {} vs grid {best}", sol.social_cost))?;
    Ok(format!("first unit vector for m = 3..10; m = 3 cost {} matches the 1/64 grid", sol.social_cost))
}

fn truthfulness() -> Check {
    let r = run_suite(Suite::Truthful, 1000, 7).map_err(e)?;
    ensure(r.pass, format!("{:?}", r.violations.first()))?;
    Ok(format!("{} deviations checked, none profitable", r.checks))
}

fn appendix_suites() -> Check {
    let u = run_suite(Suite::UniformSum, 500, 0).map_err(e)?;
    ensure(u.pass, format!("uniform-sum: {:?}", u.violations.first()))?;
    let q = run_suite(Suite::Equivalence, 500, 0).map_err(e)?;
    ensure(q.pass, format!("equivalence: {:?}", q.violations.first()))?;
    Ok("uniform-sum 500/500, pu vs pu-prime 500/500".into())
}

fn validity_oracle() -> Check {
    let r = run_suite(Suite::ValidityOracle, 2000, 0).map_err(e)?;
    ensure(r.pass, format!("{:?}", r.violations.first()))?;
    let hits = validity_positives(2000, 0).map_err(e)?;
    Ok(format!("2000 agreements ({hits} profiles reproduce their x)"))
}

fn escalation() -> Check {
    let r = run_suite(Suite::Escalation, 500, 0).map_err(e)?;
    ensure(r.pass, format!("{:?}", r.violations.first()))?;
    Ok("500 profiles escalated to three-type form without losing loss".into())
}

fn search_certificate() -> Check {
    let r = search_max_loss(Family::PiecewiseUniform, 1_000_000, 42).map_err(e)?;
    ensure(r.best_loss >= 0.66666, format!("best relaxed loss {}", r.best_loss))?;
    let w = r.witness.as_ref().ok_or("no integer witness")?;
    ensure((w.loss - r.best_loss).abs() <= WITNESS_TOL, format!("witness loss {} vs {}", w.loss, r.best_loss))?;
    let direct = Mechanism::Phantom(SystemKind::PiecewiseUniform).run(&w.profile).map_err(e)?;
    ensure(l1_distance(&direct.outcome, &w.outcome).map_err(e)? <= 1e-9, "witness outcome not reproduced")?;
    let f = falsify_upper_bound(Family::PiecewiseUniform, 2.0 / 3.0 + 1e-4, 1_000_000, 42).map_err(e)?;
    ensure(f.is_none(), format!("counterexample with loss {:?}", f.map(|w| w.loss)))?;
    Ok(format!(
        "best {:.7}, witness n = {} with engine loss {:.7}; no profile above 2/3 + 1e-4 (a budgeted search, not a proof)",
        r.best_loss, w.n, w.loss
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("worked five-voter example", worked_example, Duration::from_secs(1)),
        ("two projects, uniform phantoms", two_projects, Duration::from_secs(30)),
        ("proportionality on single-minded profiles", proportionality, Duration::from_secs(10)),
        ("1 - 1/m lower bound", phantom_lower_bound, Duration::from_secs(1)),
        ("independent markets lower bound", im_lower_bound, Duration::from_secs(5)),
        ("2 - 8/m^(1/3) lower bound", proportional_lower_bound, Duration::from_secs(60)),
        ("utilitarian 2 - 4/(m+1)", utilitarian_lower_bound, Duration::from_secs(30)),
        ("truthfulness", truthfulness, Duration::from_secs(300)),
        ("uniform sum and pu/pu-prime equivalence", appendix_suites, Duration::from_secs(120)),
        ("three-type validity oracle", validity_oracle, Duration::from_secs(120)),
        ("escalation to three-type", escalation, Duration::from_secs(120)),
        ("relaxed search and falsification", search_certificate, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if took <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; took {took:.2?}, limit {limit:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!("{} {:>2} {name} [{took:.2?}]: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
