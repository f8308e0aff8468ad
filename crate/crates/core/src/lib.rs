//! Moving phantom budget aggregation.
//!
//! A set of voters each proposes a division of a unit budget over `m`
//! projects. A moving phantom mechanism takes, for every project, the median
//! of the `n` reported shares and `n + 1` phantom values `y_k(t)`, with the
//! time `t*` chosen so that the medians add up to one. Every such mechanism is
//! truthful under ℓ1 preferences; this crate measures how far each one lands
//! from the proportional division (the coordinate-wise mean) and searches for
//! the profiles where that ℓ1-loss is largest.
//!
//! Module map:
//!
//! - [`division`]: simplex points, preference profiles, ℓ1 distance and loss.
//! - [`phantom`]: concrete phantom systems (uniform, independent markets,
//!   piecewise uniform and its shifted variant) plus the relaxed
//!   continuous-index piecewise uniform curve.
//! - [`engine`]: medians against phantoms, the feasibility sum `S(t)`, root
//!   search for `t*` and full aggregation.
//! - [`mechanism`]: string descriptors for every aggregator.
//! - [`utilitarian`]: the social-cost minimizer, solved as a linear program.
//! - [`adversarial`]: three-type profiles, their validity conditions, the
//!   escalation procedure and the stratified maximum-loss search.
//! - [`constructions`]: the deterministic lower-bound instances.
//! - [`suites`]: seeded property suites shared by the CLI and the tests.

pub mod adversarial;
pub mod constructions;
pub mod division;
pub mod engine;
mod error;
pub mod mechanism;
pub mod phantom;
pub mod rng;
pub mod suites;
pub mod utilitarian;

pub use division::{l1_distance, loss, proportional_division, Division, LossReport, Profile};
pub use engine::{aggregate, AggregationResult};
pub use mechanism::Mechanism;
pub use error::{Error, Result};
pub use phantom::{PhantomSystem, SystemKind};

/// Absolute tolerance for simplex membership and sum checks.
pub const SIMPLEX_TOL: f64 = 1e-9;
