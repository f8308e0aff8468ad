//! Mechanism descriptors shared by the constructions, the suites and the CLI.

use std::fmt;
use std::str::FromStr;

use crate::engine::{aggregate_with_tol, uniform_phantom_m2};
use crate::phantom::{PhantomSystem, SystemKind};
use crate::utilitarian::utilitarian_outcome;
use crate::{Error, LossReport, Profile, Result, SIMPLEX_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mechanism {
    Phantom(SystemKind),
    Utilitarian,
}

impl Mechanism {
    pub fn descriptor(&self) -> &'static str {
        match self {
            Mechanism::Phantom(kind) => kind.descriptor(),
            Mechanism::Utilitarian => "utilitarian",
        }
    }

    pub fn is_truthful(&self) -> bool {
        matches!(self, Mechanism::Phantom(_))
    }

    /// Runs the mechanism with the default sum tolerance.
    pub fn run(&self, profile: &Profile) -> Result<LossReport> {
        self.run_with_tol(profile, SIMPLEX_TOL)
    }

    pub fn run_with_tol(&self, profile: &Profile, tol: f64) -> Result<LossReport> {
        match self {
            Mechanism::Phantom(SystemKind::Uniform) => {
                // Only two projects make the fixed uniform phantoms feasible.
                LossReport::new(profile, uniform_phantom_m2(profile)?, None)
            }
            Mechanism::Phantom(kind) => {
                let y = PhantomSystem::new(*kind, profile.n())?;
                let r = aggregate_with_tol(profile, &y, tol)?;
                LossReport::new(profile, r.outcome, Some(r.tstar))
            }
            Mechanism::Utilitarian => LossReport::new(profile, utilitarian_outcome(profile)?.outcome, None),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.descriptor())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "utilitarian" => Ok(Mechanism::Utilitarian),
            other => Ok(Mechanism::Phantom(other.parse().map_err(|_| {
                Error::InvalidParameter(format!(
                    "unknown mechanism `{other}` (expected uniform, im, pu, pu-prime or utilitarian)"
                ))
            })?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_run() {
        let p = Profile::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        for name in ["uniform", "im", "pu", "pu-prime", "utilitarian"] {
            let mech: Mechanism = name.parse().unwrap();
            assert_eq!(mech.descriptor(), name);
            let r = mech.run(&p).unwrap();
            assert!((r.loss - crate::l1_distance(&r.outcome, &r.proportional).unwrap()).abs() < 1e-12);
        }
        assert!("median".parse::<Mechanism>().is_err());
        let p3 = Profile::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(
            Mechanism::Phantom(SystemKind::Uniform).run(&p3),
            Err(Error::ProjectCountMismatch { .. })
        ));
    }
}
