//! Default noise/degree/influence parameters shared by the long-code
//! verifier and the dictator test.
//!
//! With natural logarithms:
//! `ρ = 1/sqrt((k-1) ln R)`, `d = ceil(10 k ln R)`,
//! `δ = R^{-(10 + 100 k ln R)}`.
//! `δ` underflows `f64` for all but trivial `(k, R)`, so it is carried as
//! its natural logarithm in [`LogThreshold`].

use serde::{Deserialize, Serialize};

/// Influences at or below this are treated as exact zeros (roundoff).
pub const INFLUENCE_FLOOR: f64 = 1e-14;

/// `1/sqrt((k-1) ln R)`, clamped to `[0, 1]`.
pub fn default_rho(k: usize, r: usize) -> f64 {
    let raw = 1.0 / (((k as f64) - 1.0) * (r as f64).ln()).sqrt();
    raw.min(1.0)
}

/// `ceil(10 k ln R)`.
pub fn default_degree(k: usize, r: usize) -> usize {
    (10.0 * k as f64 * (r as f64).ln()).ceil() as usize
}

/// `ln δ = -(10 + 100 k ln R) ln R`.
pub fn default_log_delta(k: usize, r: usize) -> f64 {
    let ln_r = (r as f64).ln();
    -(10.0 + 100.0 * k as f64 * ln_r) * ln_r
}

/// A positive threshold stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogThreshold(f64);

impl LogThreshold {
    pub fn from_ln(ln: f64) -> Self {
        Self(ln)
    }

    pub fn from_value(value: f64) -> Self {
        Self(value.ln())
    }

    pub fn ln(&self) -> f64 {
        self.0
    }

    /// The threshold as a float; `0.0` when it underflows.
    pub fn value(&self) -> f64 {
        self.0.exp()
    }

    pub fn halved(&self) -> Self {
        Self(self.0 - std::f64::consts::LN_2)
    }

    /// `x > threshold`, with `x <= INFLUENCE_FLOOR` counted as zero.
    pub fn exceeded_by(&self, x: f64) -> bool {
        x > INFLUENCE_FLOOR && x.ln() > self.0
    }

    /// `x >= threshold`, with `x <= INFLUENCE_FLOOR` counted as zero.
    pub fn reached_by(&self, x: f64) -> bool {
        x > INFLUENCE_FLOOR && x.ln() >= self.0
    }
}
