//! Log-domain arithmetic.
//!
//! All density computation in this crate happens in log space; densities
//! are only exponentiated for final reporting. A density of exactly zero
//! is represented by negative infinity, which composes correctly under
//! addition (`-inf + finite = -inf`) and exponentiation (`exp(-inf) = 0`).
//! NaN is never a legal log-density; [`LogDensity::new`] rejects it.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Sub};

/// An unnormalized log-density value: any finite real, or negative
/// infinity for density zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogDensity(f64);

impl LogDensity {
    /// Density exactly zero.
    pub const ZERO_DENSITY: LogDensity = LogDensity(f64::NEG_INFINITY);

    /// Wraps a raw log value. Panics on NaN or positive infinity, which
    /// would silently corrupt every downstream acceptance ratio.
    pub fn new(value: f64) -> Self {
        assert!(
            !value.is_nan() && value != f64::INFINITY,
            "log-density must be finite or -inf, got {value}"
        );
        LogDensity(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True when this value represents density zero.
    pub fn is_zero_density(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Back to linear scale (0 for zero density).
    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

impl From<f64> for LogDensity {
    fn from(value: f64) -> Self {
        LogDensity::new(value)
    }
}

impl fmt::Display for LogDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Density product.
impl Add for LogDensity {
    type Output = LogDensity;
    fn add(self, rhs: LogDensity) -> LogDensity {
        LogDensity(self.0 + rhs.0)
    }
}

/// Density product with a raw log term.
impl Add<f64> for LogDensity {
    type Output = LogDensity;
    fn add(self, rhs: f64) -> LogDensity {
        LogDensity::new(self.0 + rhs)
    }
}

/// Log-ratio of two densities. May be +inf (certain acceptance) or NaN
/// when both sides are zero density; kernel code handles those cases
/// before forming the ratio.
impl Sub for LogDensity {
    type Output = f64;
    fn sub(self, rhs: LogDensity) -> f64 {
        self.0 - rhs.0
    }
}

/// log(sum(exp(values))) without overflow. Returns -inf for an empty
/// slice or when every entry is -inf.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Two-term log-sum-exp, the common case in mixture likelihoods.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
