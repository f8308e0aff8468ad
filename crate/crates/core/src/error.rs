use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid division: {0}")]
    InvalidDivision(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mechanism requires {expected} projects, profile has {got}")]
    ProjectCountMismatch { expected: String, got: usize },

    #[error("mechanism mismatch: {0}")]
    MechanismMismatch(String),

    #[error("feasibility bracket violated for {system}: S(0) = {low}, S(1) = {high}")]
    BracketViolated { system: String, low: f64, high: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
