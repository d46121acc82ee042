//! Gradient-driven kernels: MALA and Hamiltonian Monte Carlo.
//!
//! Both need a target with an attached gradient. MALA perturbs along the
//! drift x + (h/2)∇log π̃(x) with covariance h·I and corrects with the
//! full asymmetric Hastings ratio. HMC simulates Hamiltonian dynamics
//! with the leapfrog integrator and accepts on the energy difference;
//! the momentum is an auxiliary variable resampled every step, so the
//! position marginal is the target.
//!
//! A leapfrog trajectory that leaves the finite range (of positions,
//! momenta, or gradients) is flagged divergent and the step is rejected;
//! the rejection still consumes the step's accept/reject uniform so
//! trajectories stay reproducible.

use crate::error::{invalid_argument, invalid_parameter, Error, Result};
use crate::kernel::{hastings_log_ratio, metropolis_decision, ChainState};
use crate::logdomain::LogDensity;
use crate::stream::RngStream;
use crate::target::TargetModel;

/// Tuning for one HMC kernel: step size ε, trajectory length in steps,
/// and the diagonal of the mass matrix M.
#[derive(Debug, Clone, PartialEq)]
pub struct HmcSettings {
    step_size: f64,
    n_leapfrog: usize,
    mass_diagonal: Vec<f64>,
}

impl HmcSettings {
    pub fn new(step_size: f64, n_leapfrog: usize, mass_diagonal: Vec<f64>) -> Result<Self> {
        if !(step_size > 0.0) || !step_size.is_finite() {
            return Err(invalid_parameter(format!(
                "leapfrog step size must be positive and finite, got {step_size}"
            )));
        }
        if n_leapfrog == 0 {
            return Err(invalid_parameter("trajectory needs at least one leapfrog step"));
        }
        if mass_diagonal.is_empty()
            || mass_diagonal.iter().any(|m| !(*m > 0.0) || !m.is_finite())
        {
            return Err(invalid_parameter(format!(
                "mass diagonal entries must be positive and finite, got {mass_diagonal:?}"
            )));
        }
        Ok(HmcSettings {
            step_size,
            n_leapfrog,
            mass_diagonal,
        })
    }

    /// Identity mass matrix in `dim` dimensions.
    pub fn unit_mass(step_size: f64, n_leapfrog: usize, dim: usize) -> Result<Self> {
        Self::new(step_size, n_leapfrog, vec![1.0; dim])
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn n_leapfrog(&self) -> usize {
        self.n_leapfrog
    }

    pub fn mass_diagonal(&self) -> &[f64] {
        &self.mass_diagonal
    }
}

/// H(q,p) = −log π̃(q) + ½ pᵀM⁻¹p. Infinite at zero-density positions.
pub fn hamiltonian(log_target: LogDensity, p: &[f64], mass_diagonal: &[f64]) -> f64 {
    let kinetic: f64 = p
        .iter()
        .zip(mass_diagonal)
        .map(|(pi, m)| pi * pi / (2.0 * m))
        .sum();
    -log_target.value() + kinetic
}

/// `n_steps` leapfrog iterations, each the literal sequence: half-step
/// momentum, full-step position, half-step momentum.
///
/// Returns `None` as the divergence flag if a gradient, position, or
/// momentum goes non-finite along the way. A zero step size is the
/// identity map.
pub fn leapfrog<G>(
    q: &[f64],
    p: &[f64],
    step_size: f64,
    n_steps: usize,
    mass_diagonal: &[f64],
    gradient: G,
) -> Option<(Vec<f64>, Vec<f64>)>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut q = q.to_vec();
    let mut p = p.to_vec();
    let half = 0.5 * step_size;
    for _ in 0..n_steps {
        let g = gradient(&q);
        if !all_finite(&g) {
            return None;
        }
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi += half * gi;
        }
        for ((qi, pi), m) in q.iter_mut().zip(&p).zip(mass_diagonal) {
            *qi += step_size * pi / m;
        }
        let g = gradient(&q);
        if !all_finite(&g) {
            return None;
        }
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi += half * gi;
        }
        if !all_finite(&q) || !all_finite(&p) {
            return None;
        }
    }
    Some((q, p))
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn require_gradient(target: &TargetModel, kernel: &str) -> Result<()> {
    if !target.has_gradient() {
        return Err(Error::UnsupportedKernel(format!(
            "{kernel} needs a target with a gradient; \"{}\" has none",
            target.support_description()
        )));
    }
    Ok(())
}

/// One HMC step: resample momentum from N(0, M), integrate, accept with
/// probability min{1, exp(H − H′)}.
pub fn hmc_step(
    state: &ChainState,
    target: &TargetModel,
    settings: &HmcSettings,
    rng: &mut RngStream,
) -> Result<(ChainState, bool)> {
    require_gradient(target, "hmc")?;
    if settings.mass_diagonal.len() != target.dim() {
        return Err(invalid_argument(format!(
            "mass diagonal has {} entries for a {}-dimensional target",
            settings.mass_diagonal.len(),
            target.dim()
        )));
    }
    let mass = settings.mass_diagonal();
    let p0: Vec<f64> = mass
        .iter()
        .map(|m| m.sqrt() * rng.standard_normal())
        .collect();
    let h0 = hamiltonian(state.log_target, &p0, mass);
    let grad = |q: &[f64]| target.gradient(q).expect("gradient presence checked");
    let outcome = leapfrog(
        &state.position,
        &p0,
        settings.step_size(),
        settings.n_leapfrog(),
        mass,
        grad,
    );
    let (next, accept) = match outcome {
        None => {
            log::debug!(
                "divergent leapfrog trajectory at iteration {}; rejecting",
                state.iteration
            );
            let accept = metropolis_decision(f64::NEG_INFINITY, rng);
            debug_assert!(!accept);
            (state.clone(), false)
        }
        Some((q1, p1)) => {
            let log_target_new = target.log_density(&q1);
            let h1 = hamiltonian(log_target_new, &p1, mass);
            let accept = metropolis_decision(hastings_log_ratio(-h1, -h0), rng);
            if accept {
                (
                    ChainState {
                        position: q1,
                        log_target: log_target_new,
                        log_estimate: state.log_estimate,
                        iteration: state.iteration,
                    },
                    true,
                )
            } else {
                (state.clone(), false)
            }
        }
    };
    let mut next = next;
    next.iteration = state.iteration + 1;
    Ok((next, accept))
}

/// The Langevin proposal mean x + (h/2)∇log π̃(x).
pub fn mala_proposal_mean(target: &TargetModel, x: &[f64], step: f64) -> Result<Vec<f64>> {
    require_gradient(target, "mala")?;
    let g = target.gradient(x).expect("gradient presence checked");
    Ok(x.iter().zip(&g).map(|(xi, gi)| xi + 0.5 * step * gi).collect())
}

/// One MALA step: Gaussian proposal centred on the Langevin drift with
/// covariance h·I, accepted with the full asymmetric Hastings ratio.
pub fn mala_step(
    state: &ChainState,
    target: &TargetModel,
    step: f64,
    rng: &mut RngStream,
) -> Result<(ChainState, bool)> {
    require_gradient(target, "mala")?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid_parameter(format!(
            "mala step size must be positive and finite, got {step}"
        )));
    }
    let grad_here = target.gradient(&state.position).expect("gradient checked");
    if !all_finite(&grad_here) {
        return Err(Error::KernelFailure {
            iteration: state.iteration,
            message: format!(
                "gradient is non-finite at the current position {:?}",
                state.position
            ),
        });
    }
    let sd = step.sqrt();
    let mean_forward: Vec<f64> = state
        .position
        .iter()
        .zip(&grad_here)
        .map(|(xi, gi)| xi + 0.5 * step * gi)
        .collect();
    let proposed: Vec<f64> = mean_forward
        .iter()
        .map(|m| m + sd * rng.standard_normal())
        .collect();
    if !all_finite(&proposed) {
        return Err(Error::KernelFailure {
            iteration: state.iteration,
            message: format!("proposal produced a non-finite position {proposed:?}"),
        });
    }

    let log_target_proposed = target.log_density(&proposed);
    let log_ratio = if log_target_proposed.is_zero_density() {
        // No mass at the proposal; the backward gradient may not even
        // exist there, so skip it and reject outright.
        f64::NEG_INFINITY
    } else {
        let grad_there = target.gradient(&proposed).expect("gradient checked");
        if !all_finite(&grad_there) {
            return Err(Error::KernelFailure {
                iteration: state.iteration,
                message: format!("gradient is non-finite at proposed position {proposed:?}"),
            });
        }
        let mean_backward: Vec<f64> = proposed
            .iter()
            .zip(&grad_there)
            .map(|(yi, gi)| yi + 0.5 * step * gi)
            .collect();
        let num = log_target_proposed.value()
            + gaussian_log_density(&state.position, &mean_backward, sd);
        let den = state.log_target.value() + gaussian_log_density(&proposed, &mean_forward, sd);
        hastings_log_ratio(num, den)
    };
    let accept = metropolis_decision(log_ratio, rng);
    let next = if accept {
        ChainState {
            position: proposed,
            log_target: log_target_proposed,
            log_estimate: state.log_estimate,
            iteration: state.iteration + 1,
        }
    } else {
        ChainState {
            iteration: state.iteration + 1,
            ..state.clone()
        }
    };
    Ok((next, accept))
}

fn gaussian_log_density(x: &[f64], mean: &[f64], sd: f64) -> f64 {
    x.iter()
        .zip(mean)
        .map(|(xi, mi)| {
            crate::dist::log_pdf_normal(*xi, *mi, sd).expect("positive proposal sd")
        })
        .sum()
}
