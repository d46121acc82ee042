//! Bootstrap particle filter, exact Kalman oracle, and the particle
//! MCMC kernel built on them.
//!
//! The filter targets state-space models with scalar latent states:
//! the first state carries the init distribution, each later state is
//! drawn from the transition, and every state is weighted by its
//! observation's emission density. The per-step log mean weight
//! accumulates into an unbiased-in-expectation estimate of the marginal
//! log-likelihood, which is exactly what the pseudo-marginal acceptance
//! ratio needs.
//!
//! Resampling is systematic and happens every step. Weights live in log
//! domain until normalization.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid_argument, invalid_parameter, Error, Result};
use crate::kernel::{pseudo_marginal_step, ChainState, ProposalKernel};
use crate::logdomain::{log_sum_exp, LogDensity};
use crate::stream::RngStream;

type InitSampler = dyn Fn(&[f64], &mut RngStream) -> f64 + Send + Sync;
type InitLogDensity = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type TransitionSampler = dyn Fn(&[f64], f64, &mut RngStream) -> f64 + Send + Sync;
type TransitionLogDensity = dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync;
type EmissionLogDensity = dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync;

/// A state-space model family over a parameter vector θ: samplers and
/// log-densities for the initial state, the transition, and the
/// emission. `theta` selects one member of the family; the filter and
/// the pMCMC kernel re-bind it per evaluation.
#[derive(Clone)]
pub struct HmmModel {
    pub theta: Vec<f64>,
    init_sampler: Arc<InitSampler>,
    init_log_density: Arc<InitLogDensity>,
    transition_sampler: Arc<TransitionSampler>,
    transition_log_density: Arc<TransitionLogDensity>,
    emission_log_density: Arc<EmissionLogDensity>,
}

impl HmmModel {
    pub fn new(
        theta: Vec<f64>,
        init_sampler: impl Fn(&[f64], &mut RngStream) -> f64 + Send + Sync + 'static,
        init_log_density: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        transition_sampler: impl Fn(&[f64], f64, &mut RngStream) -> f64 + Send + Sync + 'static,
        transition_log_density: impl Fn(&[f64], f64, f64) -> f64 + Send + Sync + 'static,
        emission_log_density: impl Fn(&[f64], f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        HmmModel {
            theta,
            init_sampler: Arc::new(init_sampler),
            init_log_density: Arc::new(init_log_density),
            transition_sampler: Arc::new(transition_sampler),
            transition_log_density: Arc::new(transition_log_density),
            emission_log_density: Arc::new(emission_log_density),
        }
    }

    /// The same model family at a different parameter point.
    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        let mut model = self.clone();
        model.theta = theta;
        model
    }

    pub fn sample_init(&self, rng: &mut RngStream) -> f64 {
        (self.init_sampler)(&self.theta, rng)
    }

    pub fn init_log_density(&self, x: f64) -> f64 {
        (self.init_log_density)(&self.theta, x)
    }

    pub fn sample_transition(&self, from: f64, rng: &mut RngStream) -> f64 {
        (self.transition_sampler)(&self.theta, from, rng)
    }

    pub fn transition_log_density(&self, from: f64, to: f64) -> f64 {
        (self.transition_log_density)(&self.theta, from, to)
    }

    pub fn emission_log_density(&self, state: f64, observation: f64) -> f64 {
        (self.emission_log_density)(&self.theta, state, observation)
    }
}

/// The filter's population at one step.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    pub particles: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub log_likelihood_acc: f64,
    pub step_index: usize,
}

impl ParticleSystem {
    /// Weights rescaled to sum to one. Errors if every weight is zero.
    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        normalize_log_weights(&self.log_weights)
    }
}

fn normalize_log_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    let total = log_sum_exp(log_weights);
    if total == f64::NEG_INFINITY {
        return Err(invalid_argument("all weights are zero"));
    }
    let mut weights: Vec<f64> = log_weights.iter().map(|lw| (lw - total).exp()).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok(weights)
}

/// log of the mean of exp(log_weights), the per-step likelihood factor.
pub fn log_mean_weight(log_weights: &[f64]) -> f64 {
    log_sum_exp(log_weights) - (log_weights.len() as f64).ln()
}

/// Systematic resampling: one uniform positions N equally spaced points
/// on the cumulative weights. Counts can differ from N·wᵢ by less than
/// one, which keeps resampling noise minimal.
pub fn systematic_resample(weights: &[f64], rng: &mut RngStream) -> Result<Vec<usize>> {
    let n = weights.len();
    if n == 0 {
        return Err(invalid_argument("cannot resample zero particles"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(invalid_argument(format!(
            "weights must be finite and nonnegative, got {weights:?}"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(invalid_argument(format!(
            "weights must be normalized, sum is {sum}"
        )));
    }
    let spacing = 1.0 / n as f64;
    let start = rng.uniform() * spacing;
    let mut ancestors = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut index = 0usize;
    for j in 0..n {
        let point = start + j as f64 * spacing;
        while point > cumulative && index + 1 < n {
            index += 1;
            cumulative += weights[index];
        }
        ancestors.push(index);
    }
    Ok(ancestors)
}

/// What a filter run produces: the marginal log-likelihood estimate and
/// one latent trajectory drawn by ancestral tracing.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub log_likelihood: f64,
    pub trajectory: Vec<f64>,
}

/// Bootstrap filter: propagate, weight, accumulate, resample, for every
/// observation in order. Collapses (all-zero weights) report the
/// 1-based step at which they happened.
pub fn bootstrap_filter(
    model: &HmmModel,
    observations: &[f64],
    n_particles: usize,
    rng: &mut RngStream,
) -> Result<FilterOutcome> {
    if n_particles == 0 {
        return Err(invalid_parameter("filter needs at least one particle"));
    }
    if observations.is_empty() {
        return Err(invalid_argument("filter needs at least one observation"));
    }
    let n = n_particles;
    let mut system = ParticleSystem {
        particles: Vec::with_capacity(n),
        log_weights: vec![0.0; n],
        log_likelihood_acc: 0.0,
        step_index: 0,
    };
    let mut states_history: Vec<Vec<f64>> = Vec::with_capacity(observations.len());
    let mut ancestors_history: Vec<Vec<usize>> = Vec::with_capacity(observations.len());

    for (t, &y) in observations.iter().enumerate() {
        if t == 0 {
            for _ in 0..n {
                system.particles.push(model.sample_init(rng));
            }
        } else {
            for particle in system.particles.iter_mut() {
                *particle = model.sample_transition(*particle, rng);
            }
        }
        for (lw, &x) in system.log_weights.iter_mut().zip(&system.particles) {
            *lw = model.emission_log_density(x, y);
        }
        let step_factor = log_mean_weight(&system.log_weights);
        if step_factor == f64::NEG_INFINITY {
            return Err(Error::FilterCollapse { step: t + 1 });
        }
        system.log_likelihood_acc += step_factor;

        let weights = system.normalized_weights()?;
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let ancestors = systematic_resample(&weights, rng)?;
        states_history.push(system.particles.clone());
        let resampled: Vec<f64> = ancestors.iter().map(|&a| system.particles[a]).collect();
        system.particles = resampled;
        ancestors_history.push(ancestors);
        system.step_index = t + 1;
    }

    // Ancestral tracing of the particle in slot 0: each post-resample
    // slot j at step t-1 produced the pre-resample particle j at step t.
    let mut trajectory = vec![0.0; observations.len()];
    let mut slot = 0usize;
    for t in (0..observations.len()).rev() {
        let source = ancestors_history[t][slot];
        trajectory[t] = states_history[t][source];
        slot = source;
    }

    Ok(FilterOutcome {
        log_likelihood: system.log_likelihood_acc,
        trajectory,
    })
}

/// Linear-Gaussian state-space parameters: x₁ ~ N(init_mean, init_var),
/// xₜ = φ·xₜ₋₁ + N(0, state_noise_var), yₜ = c·xₜ + N(0, emission_noise_var).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgssParams {
    pub phi: f64,
    pub state_noise_var: f64,
    pub emission_coeff: f64,
    pub emission_noise_var: f64,
    pub init_mean: f64,
    pub init_var: f64,
}

impl LgssParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("state_noise_var", self.state_noise_var),
            ("emission_noise_var", self.emission_noise_var),
            ("init_var", self.init_var),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(invalid_parameter(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        for (name, value) in [("phi", self.phi), ("emission_coeff", self.emission_coeff),
            ("init_mean", self.init_mean)]
        {
            if !value.is_finite() {
                return Err(invalid_parameter(format!("{name} must be finite, got {value}")));
            }
        }
        Ok(())
    }

    fn to_theta(self) -> Vec<f64> {
        vec![
            self.phi,
            self.state_noise_var,
            self.emission_coeff,
            self.emission_noise_var,
            self.init_mean,
            self.init_var,
        ]
    }

    fn from_theta(theta: &[f64]) -> LgssParams {
        LgssParams {
            phi: theta[0],
            state_noise_var: theta[1],
            emission_coeff: theta[2],
            emission_noise_var: theta[3],
            init_mean: theta[4],
            init_var: theta[5],
        }
    }
}

fn normal_log_density(x: f64, mean: f64, var: f64) -> f64 {
    if var > 0.0 {
        crate::dist::log_pdf_normal(x, mean, var.sqrt()).expect("positive variance")
    } else {
        f64::NEG_INFINITY
    }
}

/// The linear-Gaussian family with θ = (φ, q, c, r, m₀, v₀). Parameter
/// points with non-positive variances emit zero density everywhere, so
/// a filter run at such a point collapses instead of crashing.
pub fn lgss_model(params: LgssParams) -> Result<HmmModel> {
    params.validate()?;
    Ok(HmmModel::new(
        params.to_theta(),
        |theta, rng| {
            let p = LgssParams::from_theta(theta);
            p.init_mean + p.init_var.max(0.0).sqrt() * rng.standard_normal()
        },
        |theta, x| {
            let p = LgssParams::from_theta(theta);
            normal_log_density(x, p.init_mean, p.init_var)
        },
        |theta, from, rng| {
            let p = LgssParams::from_theta(theta);
            p.phi * from + p.state_noise_var.max(0.0).sqrt() * rng.standard_normal()
        },
        |theta, from, to| {
            let p = LgssParams::from_theta(theta);
            normal_log_density(to, p.phi * from, p.state_noise_var)
        },
        |theta, x, y| {
            let p = LgssParams::from_theta(theta);
            normal_log_density(y, p.emission_coeff * x, p.emission_noise_var)
        },
    ))
}

/// Draws an observation sequence from the linear-Gaussian model.
pub fn generate_lgss(params: LgssParams, horizon: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    params.validate()?;
    if horizon == 0 {
        return Err(invalid_argument("horizon must be at least one"));
    }
    let mut observations = Vec::with_capacity(horizon);
    let mut x = params.init_mean + params.init_var.sqrt() * rng.standard_normal();
    for t in 0..horizon {
        if t > 0 {
            x = params.phi * x + params.state_noise_var.sqrt() * rng.standard_normal();
        }
        observations
            .push(params.emission_coeff * x + params.emission_noise_var.sqrt() * rng.standard_normal());
    }
    Ok(observations)
}

/// Exact marginal log-likelihood of a linear-Gaussian model by the
/// predict/update recursion.
pub fn kalman_loglik(params: LgssParams, observations: &[f64]) -> Result<f64> {
    params.validate()?;
    if observations.is_empty() {
        return Err(invalid_argument("need at least one observation"));
    }
    let c = params.emission_coeff;
    let mut mean = params.init_mean;
    let mut var = params.init_var;
    let mut loglik = 0.0;
    for (t, &y) in observations.iter().enumerate() {
        if t > 0 {
            mean = params.phi * mean;
            var = params.phi * params.phi * var + params.state_noise_var;
        }
        let predictive_var = c * c * var + params.emission_noise_var;
        loglik += normal_log_density(y, c * mean, predictive_var);
        let gain = var * c / predictive_var;
        mean += gain * (y - c * mean);
        var *= 1.0 - gain * c;
    }
    Ok(loglik)
}

fn pmcmc_estimator<'a, P>(
    family: &'a HmmModel,
    prior_log_density: &'a P,
    observations: &'a [f64],
    n_particles: usize,
) -> impl Fn(&[f64], &mut RngStream) -> Result<f64> + 'a
where
    P: Fn(&[f64]) -> LogDensity,
{
    move |theta: &[f64], rng: &mut RngStream| {
        let prior = prior_log_density(theta);
        if prior.is_zero_density() {
            return Ok(f64::NEG_INFINITY);
        }
        let model = family.with_theta(theta.to_vec());
        match bootstrap_filter(&model, observations, n_particles, rng) {
            Ok(outcome) => Ok(outcome.log_likelihood + prior.value()),
            Err(Error::FilterCollapse { step }) => {
                log::warn!(
                    "particle filter collapsed at step {step} for theta {theta:?}; rejecting"
                );
                Ok(f64::NEG_INFINITY)
            }
            Err(other) => Err(other),
        }
    }
}

/// Chain state for pMCMC: runs the filter once at the starting θ to
/// cache its log-likelihood estimate.
pub fn init_pmcmc_state<P>(
    theta: Vec<f64>,
    family: &HmmModel,
    prior_log_density: &P,
    observations: &[f64],
    n_particles: usize,
    rng: &mut RngStream,
) -> Result<ChainState>
where
    P: Fn(&[f64]) -> LogDensity,
{
    let estimator = pmcmc_estimator(family, prior_log_density, observations, n_particles);
    crate::kernel::init_pseudo_marginal_state(theta, estimator, rng)
}

/// One particle-MCMC step over θ: propose, run a fresh filter at the
/// proposal, accept on estimated-posterior ratio. The current θ keeps
/// its original estimate bit-for-bit across rejections; a collapsed
/// filter at the proposal is an automatic rejection, not an error.
pub fn pmcmc_step<P>(
    state: &ChainState,
    family: &HmmModel,
    prior_log_density: &P,
    proposal: &ProposalKernel,
    observations: &[f64],
    n_particles: usize,
    rng: &mut RngStream,
) -> Result<(ChainState, bool)>
where
    P: Fn(&[f64]) -> LogDensity,
{
    let estimator = pmcmc_estimator(family, prior_log_density, observations, n_particles);
    pseudo_marginal_step(state, estimator, proposal, rng)
}

/// Reads one real observation per line; blank lines are skipped.
pub fn load_series<Q: AsRef<Path>>(path: Q) -> Result<Vec<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut values = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let value: f64 = text.parse().map_err(|_| Error::DataFormat {
            line: index + 1,
            message: format!("expected a real number, got {text:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::DataFormat {
                line: index + 1,
                message: format!("observations must be finite, got {value}"),
            });
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::DataFormat {
            line: 1,
            message: "no observations in file".to_string(),
        });
    }
    Ok(values)
}

/// One value per line, 17 significant digits.
pub fn save_series<Q: AsRef<Path>>(values: &[f64], path: Q) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for value in values {
        writeln!(out, "{value:.16e}")?;
    }
    out.flush()?;
    Ok(())
}
