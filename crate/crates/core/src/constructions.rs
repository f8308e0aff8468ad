//! Deterministic lower-bound instances and the losses they force.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mechanism::Mechanism;
use crate::phantom::SystemKind;
use crate::{loss, Division, Error, Profile, Result};

pub const RHO: f64 = 2.0 - std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// Any truthful mechanism: two antipodal voters.
    TruthfulLb,
    /// Any moving phantom mechanism: half single-minded, half uniform.
    PhantomLb,
    /// Independent markets with three projects.
    ImLb,
    /// Piecewise uniform and independent markets for many projects.
    PropLb,
    /// Utilitarian aggregation.
    UtilLb,
}

impl Theorem {
    pub const ALL: [Theorem; 5] =
        [Theorem::TruthfulLb, Theorem::PhantomLb, Theorem::ImLb, Theorem::PropLb, Theorem::UtilLb];

    pub fn tag(&self) -> &'static str {
        match self {
            Theorem::TruthfulLb => "truthful-lb",
            Theorem::PhantomLb => "phantom-lb",
            Theorem::ImLb => "im-lb",
            Theorem::PropLb => "prop-lb",
            Theorem::UtilLb => "util-lb",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.tag() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown construction `{s}`")))
    }
}

/// Parameters of a construction.
///
/// `m` and `n` are normalized by [`ConstructionSpec::new`]: constructions with
/// a fixed shape (im-lb has three projects, prop-lb has `n = m`, util-lb has
/// `n = m + 1`, truthful-lb has two voters) override whatever was passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionSpec {
    pub theorem: Theorem,
    pub m: usize,
    pub n: usize,
}

impl ConstructionSpec {
    pub fn new(theorem: Theorem, m: Option<usize>, n: Option<usize>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let (m, n) = match theorem {
            Theorem::TruthfulLb => (m.unwrap_or(2), 2),
            Theorem::PhantomLb => (m.unwrap_or(3), n.unwrap_or(6)),
            Theorem::ImLb => (3, n.unwrap_or(20_000)),
            Theorem::PropLb => {
                let m = m.or(n).unwrap_or(1000);
                (m, m)
            }
            Theorem::UtilLb => {
                let m = m.unwrap_or(4);
                (m, m + 1)
            }
        };
        if m < 2 {
            return bad(format!("{theorem} needs m ≥ 2, got {m}"));
        }
        match theorem {
            Theorem::PhantomLb if n < 2 || n % 2 == 1 => {
                return bad(format!("phantom-lb needs an even n ≥ 2, got {n}"));
            }
            Theorem::ImLb if n < 2 => return bad(format!("im-lb needs n ≥ 2, got {n}")),
            Theorem::PropLb => {
                if m < 8 {
                    return bad(format!("prop-lb needs m ≥ 8, got {m}"));
                }
                let z = prop_z(m);
                if 2 * (m - z) > m {
                    return bad(format!("prop-lb needs m − z ≤ m/2, got m = {m}, z = {z}"));
                }
            }
            _ => {}
        }
        Ok(Self { theorem, m, n })
    }

    /// `z = ⌊m − m^{2/3}⌋` for prop-lb.
    pub fn z(&self) -> usize {
        prop_z(self.m)
    }

    /// `a = (m − z)²` for prop-lb.
    pub fn a(&self) -> usize {
        let d = self.m - self.z();
        d * d
    }

    /// Single-minded voters in im-lb: `⌊nρ⌋`.
    pub fn im_single(&self) -> usize {
        (self.n as f64 * RHO).floor() as usize
    }

    /// Fully satisfied voters in im-lb: `⌈n(1 − ρ)⌉`.
    pub fn im_satisfied(&self) -> usize {
        (self.n as f64 * (1.0 - RHO)).ceil() as usize
    }

    /// A time at which the given system reproduces the construction's outcome,
    /// when the proof names one.
    pub fn tstar_witness(&self, kind: SystemKind) -> Option<f64> {
        match (self.theorem, kind) {
            (Theorem::PropLb, SystemKind::PiecewiseUniform) => {
                // The first black phantom must sit at 1/(a+z): (2t − 1)/m = 1/(a+z).
                Some(0.5 + self.m as f64 / (2.0 * (self.a() + self.z()) as f64))
            }
            (Theorem::PropLb, SystemKind::IndependentMarkets) => Some(1.0 / (self.a() + self.z()) as f64),
            (Theorem::ImLb, SystemKind::IndependentMarkets) => {
                Some(std::f64::consts::SQRT_2 / (2.0 * self.n as f64))
            }
            _ => None,
        }
    }
}

/// `⌊m − m^{2/3}⌋ = m − ⌈m^{2/3}⌉`, computed on integers.
fn prop_z(m: usize) -> usize {
    let target = (m as u128) * (m as u128);
    let mut d = (m as f64).powf(2.0 / 3.0).floor() as u128;
    while d * d * d < target {
        d += 1;
    }
    while d > 0 && (d - 1) * (d - 1) * (d - 1) >= target {
        d -= 1;
    }
    m - d as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionKind {
    /// The mechanism's loss equals the prediction.
    Exact,
    /// The worst loss over the construction's profiles is at least the prediction.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub spec: ConstructionSpec,
    pub profile: Profile,
    pub predicted_loss: f64,
    pub kind: PredictionKind,
    pub closed_form: String,
    /// The bound stated for the family, which the prediction meets.
    pub theorem_bound: f64,
    /// The outcome the target mechanism is expected to return.
    pub expected_outcome: Option<Vec<f64>>,
}

fn unit(m: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[j] = 1.0;
    e
}

pub fn build(spec: &ConstructionSpec) -> Result<Construction> {
    let (m, n) = (spec.m, spec.n);
    let c = match spec.theorem {
        Theorem::TruthfulLb => Construction {
            spec: *spec,
            profile: Profile::new(vec![unit(m, 0), unit(m, 1)])?,
            predicted_loss: 0.5,
            kind: PredictionKind::AtLeast,
            closed_form: "max(1 - x2, 1 - x1) >= 1/2".into(),
            theorem_bound: 0.5,
            expected_outcome: None,
        },
        Theorem::PhantomLb => {
            let mut rows = vec![unit(m, 0); n / 2];
            rows.extend(vec![vec![1.0 / m as f64; m]; n / 2]);
            let value = 1.0 - 1.0 / m as f64;
            Construction {
                spec: *spec,
                profile: Profile::new(rows)?,
                predicted_loss: value,
                kind: PredictionKind::Exact,
                closed_form: "1 - 1/m".into(),
                theorem_bound: value,
                expected_outcome: Some(vec![1.0 / m as f64; m]),
            }
        }
        Theorem::ImLb => {
            let rest = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
            let x = vec![std::f64::consts::SQRT_2 - 1.0, rest, rest];
            let (single, satisfied) = (spec.im_single(), spec.im_satisfied());
            let x_div = Division::new(x.clone())?;
            let profile = Profile::from_groups(&[(Division::vertex(3, 0)?, single), (x_div, satisfied)])?;
            let nf = n as f64;
            let value = (3.0 - 2.0 * std::f64::consts::SQRT_2) * (1.0 - satisfied as f64 / nf) + single as f64 / nf;
            Construction {
                spec: *spec,
                profile,
                predicted_loss: value,
                kind: PredictionKind::Exact,
                closed_form: "(3 - 2*sqrt(2)) * (1 - ceil(n(1-rho))/n) + floor(n*rho)/n".into(),
                theorem_bound: 0.6862,
                expected_outcome: Some(x),
            }
        }
        Theorem::PropLb => {
            let (z, a) = (spec.z(), spec.a());
            let denom = (a + z) as f64;
            let x: Vec<f64> =
                (0..m).map(|j| if j < z { 1.0 / denom } else { (m - z) as f64 / denom }).collect();
            let mut rows: Vec<Vec<f64>> = (0..z).map(|j| unit(m, j)).collect();
            rows.extend(vec![x.clone(); m - z]);
            let value = 2.0 * (a as f64 / denom) * (z as f64 / m as f64);
            Construction {
                spec: *spec,
                profile: Profile::new(rows)?,
                predicted_loss: value,
                kind: PredictionKind::Exact,
                closed_form: "2 * a/(a+z) * z/m".into(),
                theorem_bound: 2.0 - 8.0 / (m as f64).cbrt(),
                expected_outcome: Some(x),
            }
        }
        Theorem::UtilLb => {
            let mut rows: Vec<Vec<f64>> = (0..m).map(|j| unit(m, j)).collect();
            rows.push(unit(m, 0));
            let value = 2.0 - 4.0 / (m as f64 + 1.0);
            Construction {
                spec: *spec,
                profile: Profile::new(rows)?,
                predicted_loss: value,
                kind: PredictionKind::Exact,
                closed_form: "2 - 4/(m+1)".into(),
                theorem_bound: value,
                expected_outcome: Some(unit(m, 0)),
            }
        }
    };
    Ok(c)
}

/// The two deviation profiles built from the outcome `x` on `(e₁, e₂)`:
/// `V′ = (x, e₂)` and `V″ = (e₁, x)`, with the losses `x` incurs on each.
pub fn truthful_witness(x: &Division) -> Result<(Profile, f64, Profile, f64)> {
    let m = x.m();
    let v1 = Profile::new(vec![x.shares().to_vec(), unit(m, 1)])?;
    let v2 = Profile::new(vec![unit(m, 0), x.shares().to_vec()])?;
    let l1 = loss(&v1, x)?;
    let l2 = loss(&v2, x)?;
    Ok((v1, l1, v2, l2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub theorem: Theorem,
    pub mechanism: String,
    pub m: usize,
    pub n: usize,
    pub outcome: Vec<f64>,
    pub loss: f64,
    pub predicted_loss: f64,
    pub kind: PredictionKind,
    pub theorem_bound: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

const EXACT_TOL: f64 = 1e-9;

/// Runs `mechanism` on the construction and checks the prediction.
pub fn verify(c: &Construction, mechanism: Mechanism) -> Result<VerifyReport> {
    let theorem = c.spec.theorem;
    let compatible = match (theorem, mechanism) {
        (Theorem::TruthfulLb, Mechanism::Phantom(_)) => true,
        (Theorem::PhantomLb, Mechanism::Phantom(SystemKind::Uniform)) => c.spec.m == 2,
        (Theorem::PhantomLb, Mechanism::Phantom(_)) => true,
        (Theorem::ImLb, Mechanism::Phantom(SystemKind::IndependentMarkets)) => true,
        (Theorem::PropLb, Mechanism::Phantom(SystemKind::PiecewiseUniform | SystemKind::IndependentMarkets)) => true,
        (Theorem::UtilLb, Mechanism::Utilitarian) => true,
        _ => false,
    };
    if !compatible {
        return Err(Error::MechanismMismatch(format!("{theorem} (m = {}) does not apply to {mechanism}", c.spec.m)));
    }
    let report = mechanism.run(&c.profile)?;
    let mut notes = vec![];
    let mut pass;
    let loss_value;
    match theorem {
        Theorem::TruthfulLb => {
            let x = &report.outcome;
            let (v1, l1, v2, l2) = truthful_witness(x)?;
            // A truthful mechanism must return x again on both deviation profiles.
            let o1 = mechanism.run(&v1)?.outcome;
            let o2 = mechanism.run(&v2)?.outcome;
            let same = |o: &Division| o.shares().iter().zip(x.shares()).all(|(a, b)| (a - b).abs() <= 1e-7);
            if !same(&o1) || !same(&o2) {
                notes.push("mechanism moved its outcome on a deviation profile".into());
            }
            loss_value = l1.max(l2);
            notes.push(format!("loss(V') = {l1:.12}, loss(V'') = {l2:.12}"));
            pass = same(&o1) && same(&o2) && loss_value >= c.predicted_loss - EXACT_TOL;
        }
        _ => {
            loss_value = report.loss;
            pass = (loss_value - c.predicted_loss).abs() <= EXACT_TOL;
            if theorem != Theorem::ImLb || c.spec.n >= 20_000 {
                pass &= loss_value >= c.theorem_bound - EXACT_TOL;
            }
            if let Some(x) = &c.expected_outcome {
                let dev = report.outcome.shares().iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                notes.push(format!("max deviation from the predicted outcome: {dev:.3e}"));
            }
        }
    }
    if theorem == Theorem::PropLb {
        notes.push(format!("z = {}, a = {}", c.spec.z(), c.spec.a()));
    }
    Ok(VerifyReport {
        theorem,
        mechanism: mechanism.descriptor().into(),
        m: c.spec.m,
        n: c.spec.n,
        outcome: report.outcome.into_shares(),
        loss: loss_value,
        predicted_loss: c.predicted_loss,
        kind: c.kind,
        theorem_bound: c.theorem_bound,
        pass,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SortedColumns;
    use crate::PhantomSystem;

    #[test]
    fn integer_z() {
        assert_eq!(prop_z(1000), 900);
        assert_eq!(prop_z(8), 4);
        assert_eq!(prop_z(27), 18);
        // 9^{2/3} ≈ 4.327, so z = ⌊4.673⌋ = 4.
        assert_eq!(prop_z(9), 4);
        for m in 8..300usize {
            let exact = m as f64 - (m as f64).powf(2.0 / 3.0);
            let z = prop_z(m) as f64;
            assert!(z <= exact + 1e-9 && exact < z + 1.0, "m={m}");
        }
    }

    #[test]
    fn phantom_lb_shape() {
        let spec = ConstructionSpec::new(Theorem::PhantomLb, Some(3), Some(6)).unwrap();
        let c = build(&spec).unwrap();
        assert_eq!(c.profile.n(), 6);
        assert_eq!(c.profile.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(c.profile.row(5), &[1.0 / 3.0; 3]);
        assert!((c.predicted_loss - 2.0 / 3.0).abs() < 1e-15);
        assert!(ConstructionSpec::new(Theorem::PhantomLb, Some(3), Some(5)).is_err());
    }

    #[test]
    fn phantom_lb_verifies() {
        for m in 2..=5 {
            let c = build(&ConstructionSpec::new(Theorem::PhantomLb, Some(m), Some(6)).unwrap()).unwrap();
            for kind in ["pu", "im", "pu-prime"] {
                let r = verify(&c, kind.parse().unwrap()).unwrap();
                assert!(r.pass, "{m} {kind}: {r:?}");
            }
        }
    }

    #[test]
    fn im_lb_shape() {
        let spec = ConstructionSpec::new(Theorem::ImLb, None, Some(20_000)).unwrap();
        assert_eq!(spec.im_single() + spec.im_satisfied(), 20_000);
        let c = build(&spec).unwrap();
        let x = c.profile.row(19_999);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(c.predicted_loss >= 0.6862);
        let mid = (3.0 - 2.0 * 2f64.sqrt()) * RHO + RHO;
        assert!((mid - (12.0 - 8.0 * 2f64.sqrt())).abs() < 1e-3);
    }

    #[test]
    fn prop_lb_values() {
        let spec = ConstructionSpec::new(Theorem::PropLb, Some(1000), None).unwrap();
        assert_eq!((spec.z(), spec.a(), spec.n), (900, 10_000, 1000));
        let c = build(&spec).unwrap();
        assert!((c.predicted_loss - 2.0 * (10_000.0 / 10_900.0) * 0.9).abs() < 1e-12);
        assert!((c.theorem_bound - 1.2).abs() < 1e-12);
        assert!(ConstructionSpec::new(Theorem::PropLb, Some(7), None).is_err());
        // m = 9 gives z = 4 and m − z = 5 > 9/2, so the black-phantom step fails.
        assert!(ConstructionSpec::new(Theorem::PropLb, Some(9), None).is_err());
        let failing: Vec<usize> =
            (8..2000).filter(|&m| ConstructionSpec::new(Theorem::PropLb, Some(m), None).is_err()).collect();
        assert_eq!(failing, vec![9]);
    }

    #[test]
    fn prop_lb_witness_times_reproduce_outcome() {
        for m in [8, 10, 27, 64, 100] {
            let spec = ConstructionSpec::new(Theorem::PropLb, Some(m), None).unwrap();
            let c = build(&spec).unwrap();
            let cols = SortedColumns::new(&c.profile);
            let want = c.expected_outcome.clone().unwrap();
            for kind in [SystemKind::PiecewiseUniform, SystemKind::IndependentMarkets] {
                let y = PhantomSystem::new(kind, m).unwrap();
                let t = spec.tstar_witness(kind).unwrap();
                let med = cols.medians(&y, t);
                for (a, b) in med.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-12, "m={m} {kind}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn util_lb_values() {
        let c = build(&ConstructionSpec::new(Theorem::UtilLb, Some(3), None).unwrap()).unwrap();
        assert_eq!(c.profile.n(), 4);
        assert!((c.predicted_loss - 1.0).abs() < 1e-15);
        let r = verify(&c, Mechanism::Utilitarian).unwrap();
        assert!(r.pass);
        assert!(verify(&c, "pu".parse().unwrap()).is_err());
    }

    #[test]
    fn truthful_lb_logic() {
        for k in 0..=16 {
            let a = k as f64 / 16.0;
            let x = Division::new(vec![a, 1.0 - a]).unwrap();
            let (_, l1, _, l2) = truthful_witness(&x).unwrap();
            assert!((l1 - (1.0 - x[1])).abs() < 1e-12);
            assert!((l2 - (1.0 - x[0])).abs() < 1e-12);
            assert!(l1.max(l2) >= 0.5 - 1e-12);
        }
        // Mass on a third project only raises both losses.
        let x = Division::new(vec![0.3, 0.3, 0.4]).unwrap();
        let (_, l1, _, l2) = truthful_witness(&x).unwrap();
        assert!((l1 - 0.7).abs() < 1e-12 && (l2 - 0.7).abs() < 1e-12);

        let c = build(&ConstructionSpec::new(Theorem::TruthfulLb, Some(2), None).unwrap()).unwrap();
        for kind in ["pu", "im", "uniform"] {
            assert!(verify(&c, kind.parse().unwrap()).unwrap().pass);
        }
    }

    #[test]
    fn tags_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(t.tag().parse::<Theorem>().unwrap(), t);
        }
    }
}
