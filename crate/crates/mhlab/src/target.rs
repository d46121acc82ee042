//! Target distributions: the abstraction every kernel samples from, plus
//! the concrete targets the worked examples use.
//!
//! A target only ever exposes an unnormalized log density. Kernels never
//! need the normalizing constant; quadrature exists solely for reporting
//! and histogram references in one dimension.

use std::sync::Arc;

use crate::error::{invalid_argument, invalid_parameter, Result};
use crate::logdomain::LogDensity;

type DensityFn = dyn Fn(&[f64]) -> LogDensity + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// An unnormalized target distribution on R^d.
///
/// Immutable after construction; chains evaluate it concurrently.
#[derive(Clone)]
pub struct TargetModel {
    dim: usize,
    log_density: Arc<DensityFn>,
    gradient: Option<Arc<GradientFn>>,
    support: String,
}

impl std::fmt::Debug for TargetModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetModel")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("has_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl TargetModel {
    pub fn new<F>(dim: usize, support: impl Into<String>, log_density: F) -> Self
    where
        F: Fn(&[f64]) -> LogDensity + Send + Sync + 'static,
    {
        assert!(dim >= 1, "target dimension must be positive");
        TargetModel {
            dim,
            log_density: Arc::new(log_density),
            gradient: None,
            support: support.into(),
        }
    }

    /// Attach an analytic gradient of the log density.
    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_description(&self) -> &str {
        &self.support
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Unnormalized log density at `x`.
    pub fn log_density(&self, x: &[f64]) -> LogDensity {
        debug_assert_eq!(x.len(), self.dim, "position dimension mismatch");
        (self.log_density)(x)
    }

    /// Gradient of the log density, if one was attached.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        debug_assert_eq!(x.len(), self.dim, "position dimension mismatch");
        self.gradient.as_ref().map(|g| g(x))
    }

    /// The same target with `c` added to the log density.
    ///
    /// Since every kernel works with ratios, sampling from the shifted
    /// target must reproduce the original chain bit for bit; tests lean
    /// on this to prove kernels never use the normalizing constant.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = Arc::clone(&self.log_density);
        TargetModel {
            dim: self.dim,
            log_density: Arc::new(move |x: &[f64]| inner(x) + c),
            gradient: self.gradient.clone(),
            support: self.support.clone(),
        }
    }
}

/// log of sin²(x)·sin²(2x)·φ(x), the bimodal-comb toy density.
///
/// Exactly negative infinity where sin(x) evaluates to zero (x = 0);
/// at other multiples of π/2 the floating-point residual of sin leaves
/// a value around −75, zero at double precision.
pub fn toy_sin_log_density(x: f64) -> LogDensity {
    let s1 = x.sin();
    let s2 = (2.0 * x).sin();
    if s1 == 0.0 || s2 == 0.0 {
        return LogDensity::ZERO_DENSITY;
    }
    let log_phi = -0.5 * (crate::dist::LN_TWO_PI + x * x);
    LogDensity::new(2.0 * s1.abs().ln() + 2.0 * s2.abs().ln() + log_phi)
}

/// The toy target as a one-dimensional [`TargetModel`].
pub fn toy_sin_target() -> TargetModel {
    TargetModel::new(
        1,
        "real line; density vanishes where sin(x) or sin(2x) vanishes",
        |x: &[f64]| toy_sin_log_density(x[0]),
    )
}

/// Standard d-dimensional Gaussian, log π̃(x) = −½‖x‖², with exact
/// gradient −x. The oracle target for gradient-based kernels.
pub fn gaussian_target(dim: usize) -> TargetModel {
    TargetModel::new(dim, "all of R^d", |x: &[f64]| {
        LogDensity::new(-0.5 * x.iter().map(|v| v * v).sum::<f64>())
    })
    .with_gradient(|x: &[f64]| x.iter().map(|v| -v).collect())
}

/// A finite target on the integer points {0, …, n−1}, encoded as a
/// one-dimensional model whose density is zero off the integer grid.
///
/// Weights need not be normalized, only positive.
pub fn discrete_target(weights: &[f64]) -> Result<TargetModel> {
    if weights.is_empty() {
        return Err(invalid_parameter("discrete target needs at least one state"));
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(invalid_parameter(format!(
            "discrete target weights must be positive and finite, got {weights:?}"
        )));
    }
    let log_weights: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let n = log_weights.len();
    Ok(TargetModel::new(
        1,
        format!("integer states 0..{n}"),
        move |x: &[f64]| {
            let v = x[0];
            if v.fract() == 0.0 && v >= 0.0 && (v as usize) < n {
                LogDensity::new(log_weights[v as usize])
            } else {
                LogDensity::ZERO_DENSITY
            }
        },
    ))
}

/// ∫ exp(log_density) over [lo, hi] by composite Simpson.
///
/// Grid points where the density is zero contribute nothing. The grid
/// uses at least `n_points` points (one more if needed to keep the
/// interval count even, which Simpson requires).
pub fn normalize_by_quadrature(
    target: &TargetModel,
    lo: f64,
    hi: f64,
    n_points: usize,
) -> Result<f64> {
    if target.dim() != 1 {
        return Err(invalid_argument(format!(
            "quadrature normalization is one-dimensional, target has dim {}",
            target.dim()
        )));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid_argument(format!(
            "quadrature interval must satisfy lo < hi with finite ends, got [{lo}, {hi}]"
        )));
    }
    if n_points < 100 {
        return Err(invalid_argument(format!(
            "quadrature needs at least 100 grid points, got {n_points}"
        )));
    }
    let n_intervals = if (n_points - 1) % 2 == 0 {
        n_points - 1
    } else {
        n_points
    };
    let h = (hi - lo) / n_intervals as f64;
    let eval = |x: f64| target.log_density(&[x]).exp();
    let mut acc = eval(lo) + eval(hi);
    for i in 1..n_intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * eval(lo + i as f64 * h);
    }
    Ok(acc * h / 3.0)
}

/// Central finite differences of the log density, the oracle every
/// analytic gradient is checked against.
pub fn finite_difference_gradient(target: &TargetModel, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = target.log_density(&probe).value();
        probe[i] = x[i] - h;
        let minus = target.log_density(&probe).value();
        probe[i] = x[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    grad
}
