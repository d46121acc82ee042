//! The Poisson/geometric mixture model: count data, likelihood, and
//! posterior.
//!
//! The model: each observation is Poisson(λ) with probability α and
//! geometric with the same mean λ (success probability 1/(1+λ)) with
//! probability 1−α. Priors are π(λ) ∝ 1/λ and α ~ Beta(0.5, 0.5).
//!
//! Likelihood evaluation groups observations by value: the dataset has
//! far fewer distinct counts than observations, so each posterior call
//! costs a handful of pmf evaluations instead of one per observation.

use std::path::Path;
use std::sync::Arc;

use crate::dist::{log_pdf_beta, log_pmf_geometric, log_pmf_poisson};
use crate::error::{invalid_parameter, Error, Result};
use crate::logdomain::{log_add_exp, LogDensity};
use crate::stream::RngStream;
use crate::target::TargetModel;

/// A dataset of nonnegative integer counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixtureData {
    observations: Vec<u64>,
    // Distinct values with multiplicities, ascending.
    counts: Vec<(u64, usize)>,
}

impl MixtureData {
    pub fn from_observations(observations: Vec<u64>) -> Result<Self> {
        if observations.is_empty() {
            return Err(invalid_parameter("dataset needs at least one observation"));
        }
        let mut sorted = observations.clone();
        sorted.sort_unstable();
        let mut counts: Vec<(u64, usize)> = Vec::new();
        for v in sorted {
            match counts.last_mut() {
                Some((value, n)) if *value == v => *n += 1,
                _ => counts.push((v, 1)),
            }
        }
        Ok(MixtureData {
            observations,
            counts,
        })
    }

    /// Read one nonnegative integer per line; blank lines are ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut observations = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let value: u64 = trimmed.parse().map_err(|_| Error::DataFormat {
                line: idx + 1,
                message: format!("expected a nonnegative integer, got {trimmed:?}"),
            })?;
            observations.push(value);
        }
        if observations.is_empty() {
            return Err(Error::DataFormat {
                line: 0,
                message: "file contains no observations".into(),
            });
        }
        Self::from_observations(observations)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = String::new();
        for v in &self.observations {
            text.push_str(&v.to_string());
            text.push('\n');
        }
        std::fs::write(path.as_ref(), text)?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn observations(&self) -> &[u64] {
        &self.observations
    }

    /// Distinct values with multiplicities, ascending.
    pub fn value_counts(&self) -> &[(u64, usize)] {
        &self.counts
    }

    pub fn mean(&self) -> f64 {
        self.observations.iter().sum::<u64>() as f64 / self.observations.len() as f64
    }
}

/// `n` Poisson(λ) draws by CDF inversion.
///
/// This is the generator behind the shipped 123-observation dataset;
/// a test regenerates that file from its documented seed.
pub fn generate_poisson(lambda: f64, n: usize, rng: &mut RngStream) -> Result<Vec<u64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid_parameter(format!(
            "poisson rate must be positive and finite, got {lambda}"
        )));
    }
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.uniform();
        let mut k = 0u64;
        let mut pmf = (-lambda).exp();
        let mut cdf = pmf;
        while u > cdf {
            k += 1;
            pmf *= lambda / k as f64;
            cdf += pmf;
        }
        draws.push(k);
    }
    Ok(draws)
}

/// Σᵢ log{ α·Pois(xᵢ; λ) + (1−α)·Geom(xᵢ; 1/(1+λ)) }.
///
/// The inner two-term sum is computed by log-sum-exp; the outer sum
/// runs over distinct values weighted by multiplicity.
pub fn mixture_log_likelihood(data: &MixtureData, lambda: f64, alpha: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid_parameter(format!(
            "mixture rate must be positive and finite, got {lambda}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid_parameter(format!(
            "mixture weight must lie in [0, 1], got {alpha}"
        )));
    }
    let p = 1.0 / (1.0 + lambda);
    let log_alpha = alpha.ln();
    let log_one_minus = (1.0 - alpha).ln();
    let mut total = 0.0;
    for &(value, multiplicity) in data.value_counts() {
        let pois = log_pmf_poisson(value, lambda)?;
        let geom = log_pmf_geometric(value, p)?;
        let term = log_add_exp(log_alpha + pois, log_one_minus + geom);
        total += multiplicity as f64 * term;
    }
    Ok(total)
}

/// Unnormalized log posterior: likelihood − log λ + log Beta(α; ½, ½).
///
/// Total on R²: anything outside λ > 0, 0 < α < 1 has zero density, so
/// kernels can evaluate arbitrary proposed points.
pub fn mixture_log_posterior(data: &MixtureData, lambda: f64, alpha: f64) -> LogDensity {
    if !(lambda > 0.0) || !lambda.is_finite() || !(alpha > 0.0 && alpha < 1.0) {
        return LogDensity::ZERO_DENSITY;
    }
    let loglik =
        mixture_log_likelihood(data, lambda, alpha).expect("domain checked above");
    let log_prior_alpha = log_pdf_beta(alpha, 0.5, 0.5).expect("fixed valid shapes");
    LogDensity::new(loglik - lambda.ln() + log_prior_alpha)
}

/// The mixture posterior as a two-dimensional target over (λ, α).
pub fn mixture_target(data: MixtureData) -> TargetModel {
    let data = Arc::new(data);
    TargetModel::new(
        2,
        "lambda > 0, alpha in (0,1)",
        move |x: &[f64]| mixture_log_posterior(&data, x[0], x[1]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_data() -> MixtureData {
        MixtureData::from_observations(vec![0, 1, 2, 3, 5, 1, 0, 2]).unwrap()
    }

    #[test]
    fn value_counts_group_and_sort() {
        let data = MixtureData::from_observations(vec![2, 0, 2, 1]).unwrap();
        assert_eq!(data.value_counts(), &[(0, 1), (1, 1), (2, 2)]);
        assert_eq!(data.n(), 4);
        assert_relative_eq!(data.mean(), 1.25);
    }

    #[test]
    fn likelihood_collapses_at_alpha_extremes() {
        let data = small_data();
        let lambda = 1.3;
        let pois: f64 = data
            .observations()
            .iter()
            .map(|&k| log_pmf_poisson(k, lambda).unwrap())
            .sum();
        let geom: f64 = data
            .observations()
            .iter()
            .map(|&k| log_pmf_geometric(k, 1.0 / (1.0 + lambda)).unwrap())
            .sum();
        assert_relative_eq!(
            mixture_log_likelihood(&data, lambda, 1.0).unwrap(),
            pois,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            mixture_log_likelihood(&data, lambda, 0.0).unwrap(),
            geom,
            epsilon = 1e-12
        );
    }

    #[test]
    fn one_observation_hand_value() {
        let data = MixtureData::from_observations(vec![0]).unwrap();
        let expected = (0.5 * (-1.0_f64).exp() + 0.5 * 0.5).ln();
        assert_relative_eq!(
            mixture_log_likelihood(&data, 1.0, 0.5).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn grouped_likelihood_matches_naive_sum() {
        let data = small_data();
        for (lambda, alpha) in [(0.7_f64, 0.3_f64), (1.0, 0.5), (2.5, 0.9)] {
            let naive: f64 = data
                .observations()
                .iter()
                .map(|&k| {
                    log_add_exp(
                        alpha.ln() + log_pmf_poisson(k, lambda).unwrap(),
                        (1.0 - alpha).ln()
                            + log_pmf_geometric(k, 1.0 / (1.0 + lambda)).unwrap(),
                    )
                })
                .sum();
            assert_relative_eq!(
                mixture_log_likelihood(&data, lambda, alpha).unwrap(),
                naive,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn likelihood_rejects_bad_parameters() {
        let data = small_data();
        assert!(mixture_log_likelihood(&data, 0.0, 0.5).is_err());
        assert!(mixture_log_likelihood(&data, -1.0, 0.5).is_err());
        assert!(mixture_log_likelihood(&data, 1.0, -0.1).is_err());
        assert!(mixture_log_likelihood(&data, 1.0, 1.1).is_err());
    }

    #[test]
    fn likelihood_is_continuous_in_parameters() {
        let data = small_data();
        for (lambda, alpha) in [(0.5, 0.2), (1.0, 0.5), (3.0, 0.8)] {
            let base = mixture_log_likelihood(&data, lambda, alpha).unwrap();
            let dl = mixture_log_likelihood(&data, lambda + 1e-8, alpha).unwrap();
            let da = mixture_log_likelihood(&data, lambda, alpha + 1e-8).unwrap();
            assert!((dl - base).abs() < 1e-4);
            assert!((da - base).abs() < 1e-4);
        }
    }

    #[test]
    fn components_share_mean_lambda() {
        for lambda in [0.5, 1.0, 2.0, 4.0] {
            let p = 1.0 / (1.0 + lambda);
            let mut pois_mean = 0.0;
            let mut geom_mean = 0.0;
            for k in 0..400u64 {
                pois_mean += k as f64 * log_pmf_poisson(k, lambda).unwrap().exp();
                geom_mean += k as f64 * log_pmf_geometric(k, p).unwrap().exp();
            }
            assert!((pois_mean - lambda).abs() < 1e-8, "poisson mean {pois_mean}");
            assert!((geom_mean - lambda).abs() < 1e-8, "geometric mean {geom_mean}");
        }
    }

    #[test]
    fn posterior_minus_likelihood_ignores_data() {
        let data_a = small_data();
        let data_b = MixtureData::from_observations(vec![4, 4, 0, 7]).unwrap();
        for (lambda, alpha) in [(0.9, 0.4), (2.0, 0.6)] {
            let gap_a = mixture_log_posterior(&data_a, lambda, alpha).value()
                - mixture_log_likelihood(&data_a, lambda, alpha).unwrap();
            let gap_b = mixture_log_posterior(&data_b, lambda, alpha).value()
                - mixture_log_likelihood(&data_b, lambda, alpha).unwrap();
            assert_relative_eq!(gap_a, gap_b, epsilon = 1e-12);
        }
    }

    #[test]
    fn posterior_hand_value_and_boundaries() {
        let data = MixtureData::from_observations(vec![0]).unwrap();
        let loglik = (0.5 * (-1.0_f64).exp() + 0.5 * 0.5).ln();
        let expected = loglik - 1.0_f64.ln() + (2.0 / std::f64::consts::PI).ln();
        assert_relative_eq!(
            mixture_log_posterior(&data, 1.0, 0.5).value(),
            expected,
            epsilon = 1e-12
        );
        assert!(mixture_log_posterior(&data, 1.0, 0.0).is_zero_density());
        assert!(mixture_log_posterior(&data, 1.0, 1.0).is_zero_density());
        assert!(mixture_log_posterior(&data, 0.0, 0.5).is_zero_density());
        assert!(mixture_log_posterior(&data, -2.0, 0.5).is_zero_density());
    }

    #[test]
    fn target_wraps_posterior() {
        let data = small_data();
        let target = mixture_target(data.clone());
        assert_eq!(target.dim(), 2);
        assert_relative_eq!(
            target.log_density(&[1.2, 0.45]).value(),
            mixture_log_posterior(&data, 1.2, 0.45).value(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn load_save_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.txt");
        let data = small_data();
        data.save(&path).unwrap();
        let loaded = MixtureData::load(&path).unwrap();
        assert_eq!(loaded, data);

        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "1\n2\n-3\n").unwrap();
        match MixtureData::load(&bad) {
            Err(Error::DataFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected data format error, got {other:?}"),
        }

        let empty = dir.path().join("empty.txt");
        std::fs::write(&empty, "\n\n").unwrap();
        assert!(MixtureData::load(&empty).is_err());
    }

    #[test]
    fn poisson_generator_mean_and_determinism() {
        let mut a = RngStream::new(8);
        let mut b = RngStream::new(8);
        let draws_a = generate_poisson(1.0, 100_000, &mut a).unwrap();
        let draws_b = generate_poisson(1.0, 100_000, &mut b).unwrap();
        assert_eq!(draws_a, draws_b);
        let mean = draws_a.iter().sum::<u64>() as f64 / draws_a.len() as f64;
        // CLT: sd of the mean is 1/√n ≈ 0.0032.
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!(generate_poisson(0.0, 10, &mut a).is_err());
    }
}
