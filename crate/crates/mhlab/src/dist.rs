//! Log-space densities and the proposal distributions built from them.
//!
//! Everything stays in log space; nothing here exponentiates except the
//! samplers. The families are exactly the ones the bundled targets and
//! kernels need, not a general distribution library.

use crate::error::{invalid_parameter, Result};
use crate::logdomain::LogDensity;
use crate::stream::RngStream;
use rand_distr::Distribution;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

/// ln(2π), the normalizing constant of the standard normal.
pub const LN_TWO_PI: f64 = 1.837_877_066_409_345_3;

/// log φ((x−mu)/sigma) − log sigma.
pub fn log_pdf_normal(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid_parameter(format!(
            "normal sigma must be positive, got {sigma}"
        )));
    }
    let z = (x - mu) / sigma;
    Ok(-0.5 * (LN_TWO_PI + z * z) - sigma.ln())
}

/// k·log λ − λ − log k!.
pub fn log_pmf_poisson(k: u64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid_parameter(format!(
            "poisson rate must be positive, got {lambda}"
        )));
    }
    let kf = k as f64;
    Ok(kf * lambda.ln() - lambda - ln_gamma(kf + 1.0))
}

/// log p + k·log(1−p) on the support {0, 1, 2, …}.
pub fn log_pmf_geometric(k: u64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid_parameter(format!(
            "geometric success probability must lie in (0,1], got {p}"
        )));
    }
    if p == 1.0 {
        // All mass on k = 0; (1−p)^0 is 1, every other k has zero mass.
        return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(p.ln() + k as f64 * (1.0 - p).ln())
}

/// (a−1)log x + (b−1)log(1−x) − log B(a,b).
///
/// On or outside the boundary {0,1} this returns negative infinity (the
/// density limit), so rejection logic treats boundary proposals uniformly
/// instead of erroring.
pub fn log_pdf_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid_parameter(format!(
            "beta shape parameters must be positive, got ({a}, {b})"
        )));
    }
    if !(x > 0.0 && x < 1.0) {
        return Ok(LogDensity::ZERO_DENSITY.value());
    }
    Ok((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b))
}

/// A one-dimensional proposal distribution with a matching log density,
/// the pair every Hastings ratio needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProposalDist {
    /// Uniform on the open interval (lo, hi).
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    /// Log-normal: ln Y ~ N(log_mean, sd²).
    LogNormal { log_mean: f64, sd: f64 },
    Beta { a: f64, b: f64 },
}

impl ProposalDist {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid_parameter(format!(
                "uniform interval must satisfy lo < hi with finite ends, got ({lo}, {hi})"
            )));
        }
        Ok(ProposalDist::Uniform { lo, hi })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !mean.is_finite() {
            return Err(invalid_parameter(format!(
                "normal proposal needs finite mean and positive sd, got ({mean}, {sd})"
            )));
        }
        Ok(ProposalDist::Normal { mean, sd })
    }

    pub fn log_normal(log_mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !log_mean.is_finite() {
            return Err(invalid_parameter(format!(
                "log-normal proposal needs finite log-mean and positive sd, got ({log_mean}, {sd})"
            )));
        }
        Ok(ProposalDist::LogNormal { log_mean, sd })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(invalid_parameter(format!(
                "beta proposal needs positive shapes, got ({a}, {b})"
            )));
        }
        Ok(ProposalDist::Beta { a, b })
    }

    /// One draw. Deterministic for a fixed stream state.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            ProposalDist::Uniform { lo, hi } => lo + (hi - lo) * rng.uniform(),
            ProposalDist::Normal { mean, sd } => mean + sd * rng.standard_normal(),
            ProposalDist::LogNormal { log_mean, sd } => {
                (log_mean + sd * rng.standard_normal()).exp()
            }
            ProposalDist::Beta { a, b } => {
                // Shapes were validated at construction.
                let beta = rand_distr::Beta::new(a, b).expect("validated beta shapes");
                beta.sample(rng)
            }
        }
    }

    /// Log density of this proposal at `y`; negative infinity off support.
    pub fn log_density(&self, y: f64) -> f64 {
        match *self {
            ProposalDist::Uniform { lo, hi } => {
                if y > lo && y < hi {
                    -(hi - lo).ln()
                } else {
                    LogDensity::ZERO_DENSITY.value()
                }
            }
            ProposalDist::Normal { mean, sd } => {
                log_pdf_normal(y, mean, sd).expect("validated normal sd")
            }
            ProposalDist::LogNormal { log_mean, sd } => {
                if y > 0.0 {
                    log_pdf_normal(y.ln(), log_mean, sd).expect("validated log-normal sd") - y.ln()
                } else {
                    LogDensity::ZERO_DENSITY.value()
                }
            }
            ProposalDist::Beta { a, b } => log_pdf_beta(y, a, b).expect("validated beta shapes"),
        }
    }
}
