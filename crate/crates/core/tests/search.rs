use phantom_core::adversarial::search::{
    falsify_upper_bound, integer_witness, search_max_loss, Family, Status, WITNESS_TOL,
};
use phantom_core::adversarial::{relaxed_loss, three_type_valid, three_type_valid_zero};
use phantom_core::{Mechanism, PhantomSystem, SystemKind};

#[test]
fn independent_markets_reach_the_construction() {
    let r = search_max_loss(Family::IndependentMarkets, 1_000_000, 42).unwrap();
    assert!(r.best_loss >= 0.686, "{}", r.best_loss);
    assert!(r.best_loss <= 12.0 - 8.0 * 2f64.sqrt() + 1e-6);
    let w = r.witness.unwrap();
    assert!((w.loss - r.best_loss).abs() <= WITNESS_TOL);
}

#[test]
fn two_projects_reach_one_half() {
    let r = search_max_loss(Family::UniformTwo, 100_000, 0).unwrap();
    assert!((r.best_loss - 0.5).abs() <= 1e-3, "{}", r.best_loss);
    let w = r.witness.unwrap();
    let direct = Mechanism::Phantom(SystemKind::Uniform).run(&w.profile).unwrap();
    assert!((direct.loss - w.loss).abs() < 1e-12);
}

#[test]
fn falsification_finds_known_constructions() {
    let w = falsify_upper_bound(Family::PiecewiseUniform, 0.6, 100_000, 42).unwrap().expect("2/3 exists above 0.6");
    assert!(w.loss > 0.6);
    let direct = Mechanism::Phantom(SystemKind::PiecewiseUniform).run(&w.profile).unwrap();
    assert!((direct.loss - w.loss).abs() < 1e-12);
    let w = falsify_upper_bound(Family::IndependentMarkets, 0.68, 1_000_000, 42).unwrap().expect("im exceeds 0.68");
    assert!(w.loss > 0.68);
    assert!(falsify_upper_bound(Family::PiecewiseUniform, 0.6668, 1_000_000, 42).unwrap().is_none());
}

#[test]
fn report_rows_are_consistent() {
    let r = search_max_loss(Family::PiecewiseUniform, 200_000, 1).unwrap();
    assert_eq!(r.rows.len(), 116);
    for row in &r.rows {
        match row.status {
            Status::OptimalCandidate => {
                let p = row.point.as_ref().unwrap();
                assert!((relaxed_loss(p) - row.loss.unwrap()).abs() < 1e-12);
                assert!(row.objective.unwrap() <= row.loss.unwrap() + 1e-12);
            }
            Status::Infeasible => assert!(row.point.is_none() && row.loss.is_none()),
        }
    }
    let best = r.rows.iter().filter_map(|row| row.loss).fold(0.0, f64::max);
    assert_eq!(best, r.best_loss);
}

#[test]
fn reproduced_witnesses_satisfy_the_bounds() {
    let r = search_max_loss(Family::PiecewiseUniform, 200_000, 3).unwrap();
    let mut reproduced = 0;
    for row in &r.rows {
        let (Some(p), Some(wref)) = (&row.point, row.witness) else { continue };
        let w = integer_witness(Family::PiecewiseUniform, p, wref.n).unwrap();
        assert!((w.loss - row.loss.unwrap()).abs() <= WITNESS_TOL);
        let x = w.three_type.x.shares();
        let hit = x.iter().zip(w.outcome.shares()).all(|(a, b)| (a - b).abs() <= 1e-9);
        if !hit {
            continue;
        }
        let y = PhantomSystem::piecewise_uniform(w.n).unwrap();
        let t = w.tstar.unwrap();
        let valid = if x.iter().all(|&v| v > 0.0) {
            three_type_valid(&w.three_type, &y, t).unwrap()
        } else {
            three_type_valid_zero(&w.three_type, &y, t).unwrap()
        };
        assert!(valid, "{}", row.pattern);
        reproduced += 1;
    }
    assert!(reproduced > 0);
}

#[test]
fn rounding_error_shrinks_with_the_denominator() {
    for family in [Family::PiecewiseUniform, Family::IndependentMarkets] {
        let r = search_max_loss(family, 100_000, 9).unwrap();
        for row in &r.rows {
            let Some(p) = &row.point else { continue };
            let relaxed = relaxed_loss(p);
            for n in [6_000usize, 600_000] {
                let w = integer_witness(family, p, n).unwrap();
                assert!((w.loss - relaxed).abs() <= 10.0 / n as f64, "{family} {} n={n}: {} vs {relaxed}", row.pattern, w.loss);
            }
        }
    }
}
