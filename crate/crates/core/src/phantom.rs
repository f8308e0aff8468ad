//! Phantom systems: families of `n + 1` ordered, monotone curves `y_k(t)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default shift for [`SystemKind::PiecewiseUniformPrime`].
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SystemKind {
    /// `y_k = k/n`, independent of `t`.
    Uniform,
    /// `y_k(t) = min(k t, 1)`.
    #[serde(rename = "im")]
    IndependentMarkets,
    #[serde(rename = "pu")]
    PiecewiseUniform,
    /// Piecewise uniform with the time axis stretched so that `y_k(1) = 1`.
    #[serde(rename = "pu-prime")]
    PiecewiseUniformPrime { epsilon: f64 },
}

impl SystemKind {
    pub fn descriptor(&self) -> &'static str {
        match self {
            SystemKind::Uniform => "uniform",
            SystemKind::IndependentMarkets => "im",
            SystemKind::PiecewiseUniform => "pu",
            SystemKind::PiecewiseUniformPrime { .. } => "pu-prime",
        }
    }

    /// Whether the phantoms actually move with `t`.
    pub fn is_moving(&self) -> bool {
        !matches!(self, SystemKind::Uniform)
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemKind::PiecewiseUniformPrime { epsilon } => write!(f, "pu-prime(ε={epsilon})"),
            other => f.write_str(other.descriptor()),
        }
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SystemKind::Uniform),
            "im" => Ok(SystemKind::IndependentMarkets),
            "pu" => Ok(SystemKind::PiecewiseUniform),
            "pu-prime" => Ok(SystemKind::PiecewiseUniformPrime { epsilon: DEFAULT_EPSILON }),
            other => Err(Error::InvalidParameter(format!("unknown phantom system `{other}`"))),
        }
    }
}

/// A phantom system instantiated for `n` voters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomSystem {
    n: usize,
    kind: SystemKind,
}

impl PhantomSystem {
    pub fn new(kind: SystemKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("phantom system needs n ≥ 1".into()));
        }
        if let SystemKind::PiecewiseUniformPrime { epsilon } = kind {
            if !(epsilon > 0.0 && epsilon < 0.5) {
                return Err(Error::InvalidParameter(format!("ε = {epsilon} outside (0, 1/2)")));
            }
        }
        Ok(Self { n, kind })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(SystemKind::Uniform, n)
    }

    pub fn independent_markets(n: usize) -> Result<Self> {
        Self::new(SystemKind::IndependentMarkets, n)
    }

    pub fn piecewise_uniform(n: usize) -> Result<Self> {
        Self::new(SystemKind::PiecewiseUniform, n)
    }

    pub fn piecewise_uniform_prime(n: usize, epsilon: f64) -> Result<Self> {
        Self::new(SystemKind::PiecewiseUniformPrime { epsilon }, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    /// `y_k(t)` for `k ∈ 0..=n`, `t ∈ [0, 1]`.
    #[inline]
    pub fn value(&self, k: usize, t: f64) -> f64 {
        debug_assert!(k <= self.n);
        let x = k as f64 / self.n as f64;
        match self.kind {
            SystemKind::Uniform => x,
            SystemKind::IndependentMarkets => (k as f64 * t).min(1.0),
            SystemKind::PiecewiseUniform => relaxed_phantom(x, t),
            SystemKind::PiecewiseUniformPrime { epsilon } => pu_prime(x, t, epsilon),
        }
    }

    /// All `n + 1` phantom values at time `t`.
    pub fn values(&self, t: f64) -> Vec<f64> {
        (0..=self.n).map(|k| self.value(k, t)).collect()
    }
}

/// Piecewise uniform phantoms with index at most half of `n` are black.
pub fn is_black(k: usize, n: usize) -> bool {
    2 * k < n
}

/// The piecewise uniform curve with a continuous index fraction `x`.
///
/// Below `t = 1/2` only the upper half of the phantoms rise, fanning out from
/// 0 towards `(0, …, 0, 1/2, …, 1)`; above it the lower half catches up until
/// every phantom sits at `x`. At `x = 1/2` both halves coincide, so the
/// boundary choice does not matter for the value.
#[inline]
pub fn relaxed_phantom(x: f64, t: f64) -> f64 {
    if t < 0.5 {
        if x <= 0.5 {
            0.0
        } else {
            4.0 * t * x - 2.0 * t
        }
    } else if x <= 0.5 {
        x * (2.0 * t - 1.0)
    } else {
        x * (3.0 - 2.0 * t) - 2.0 + 2.0 * t
    }
}

fn pu_prime(x: f64, t: f64, eps: f64) -> f64 {
    if t < 0.5 - eps {
        // [0, 1/2 − ε) is the first half of the piecewise uniform clock
        // stretched by 1/(1 − 2ε).
        relaxed_phantom(x, (t / (1.0 - 2.0 * eps)).min(0.5))
    } else if t < 1.0 - eps {
        relaxed_phantom(x, (t + eps).min(1.0))
    } else {
        // Final ramp from y = x at t = 1 − ε to y = 1 at t = 1.
        (x * (1.0 - t) / eps + (t - 1.0) / eps + 1.0).clamp(0.0, 1.0)
    }
}
