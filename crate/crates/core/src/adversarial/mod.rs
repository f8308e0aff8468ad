//! Worst-case profiles for moving phantom mechanisms on three projects.
//!
//! [`three_type`] holds the integer profiles made of single-minded,
//! double-minded and fully-satisfied voters, [`escalate`] rewrites an
//! arbitrary profile into that shape without lowering the loss, [`relaxed`]
//! is the continuous program over fractional voter counts and [`search`]
//! maximizes it pattern by pattern.

pub mod escalate;
pub mod relaxed;
pub mod search;
pub mod three_type;

pub use escalate::{escalate, EscalationOutcome};
pub use relaxed::{relaxed_feasible, relaxed_feasible_zero, relaxed_loss, RelaxedThreeType};
pub use search::{falsify_upper_bound, search_max_loss, Family, SearchReport, Witness};
pub use three_type::{classify, three_type_valid, three_type_valid_zero, ThreeTypeProfile, VoterClass};
