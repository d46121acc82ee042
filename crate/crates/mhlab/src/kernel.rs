//! Metropolis-Hastings transition kernels.
//!
//! Every kernel is a pure function of (state, rng): it returns the next
//! state plus what happened, and never mutates its inputs. A chain is a
//! fold of steps over one [`RngStream`].
//!
//! Acceptance arithmetic lives entirely in log space. The ratio
//! ρ(x,y) = min{1, π̃(y)q(x|y) / π̃(x)q(y|x)} is evaluated as a log
//! numerator and log denominator with two escape rules so that zero
//! density never produces NaN:
//!
//! - numerator zero (log = −∞): reject, whatever the denominator;
//! - denominator zero alone: accept (the chain escapes a zero-density
//!   point as soon as the proposal has mass).
//!
//! Every accept/reject decision consumes exactly one uniform draw, even
//! when ρ = 1, so trajectories are stable across refactorings.

use std::sync::Arc;

use crate::dist::{log_pdf_beta, log_pdf_normal};
use crate::error::{invalid_argument, invalid_parameter, Error, Result};
use crate::logdomain::LogDensity;
use crate::stream::RngStream;
use crate::target::TargetModel;
use rand_distr::Distribution;

/// The chain's position together with everything cached about it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub position: Vec<f64>,
    /// log π̃ at `position`; for pseudo-marginal chains this mirrors the
    /// current log estimate.
    pub log_target: LogDensity,
    /// Pseudo-marginal chains only: the log estimate drawn when this
    /// position was accepted, carried unchanged across rejections.
    pub log_estimate: Option<f64>,
    pub iteration: u64,
}

impl ChainState {
    /// Start a chain at `position`, evaluating the target there.
    pub fn init(position: Vec<f64>, target: &TargetModel) -> Self {
        let log_target = target.log_density(&position);
        ChainState {
            position,
            log_target,
            log_estimate: None,
            iteration: 0,
        }
    }
}

type SampleFn = dyn Fn(&[f64], &mut RngStream) -> Vec<f64> + Send + Sync;
type PairDensityFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// A proposal mechanism: how to draw a candidate from the current
/// position, and the log density of that draw in either direction.
///
/// Kernels skip the density evaluations entirely when `symmetric` is
/// set, which is also what makes the random-walk simplification take
/// the exact same arithmetic path as the general ratio.
#[derive(Clone)]
pub struct ProposalKernel {
    sample: Arc<SampleFn>,
    log_density: Arc<PairDensityFn>,
    symmetric: bool,
}

impl std::fmt::Debug for ProposalKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProposalKernel")
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

impl ProposalKernel {
    pub fn new<S, D>(symmetric: bool, sample: S, log_density: D) -> Self
    where
        S: Fn(&[f64], &mut RngStream) -> Vec<f64> + Send + Sync + 'static,
        D: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        ProposalKernel {
            sample: Arc::new(sample),
            log_density: Arc::new(log_density),
            symmetric,
        }
    }

    pub fn sample(&self, from: &[f64], rng: &mut RngStream) -> Vec<f64> {
        (self.sample)(from, rng)
    }

    /// log q(to | from); negative infinity where the move has no density.
    pub fn log_density(&self, from: &[f64], to: &[f64]) -> f64 {
        (self.log_density)(from, to)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Componentwise uniform perturbation: yᵢ ∈ (xᵢ − sᵢ, xᵢ + sᵢ).
    pub fn uniform_walk(scales: Vec<f64>) -> Result<Self> {
        validate_scales(&scales)?;
        let sample_scales = scales.clone();
        let log_norm: f64 = scales.iter().map(|s| (2.0 * s).ln()).sum();
        Ok(ProposalKernel::new(
            true,
            move |from: &[f64], rng: &mut RngStream| {
                from.iter()
                    .zip(&sample_scales)
                    .map(|(x, s)| x + s * (2.0 * rng.uniform() - 1.0))
                    .collect()
            },
            move |from: &[f64], to: &[f64]| {
                let inside = from
                    .iter()
                    .zip(to)
                    .zip(&scales)
                    .all(|((x, y), s)| (y - x).abs() < *s);
                if inside {
                    -log_norm
                } else {
                    f64::NEG_INFINITY
                }
            },
        ))
    }

    /// Componentwise Gaussian perturbation with standard deviation sᵢ.
    pub fn gaussian_walk(scales: Vec<f64>) -> Result<Self> {
        validate_scales(&scales)?;
        let sample_scales = scales.clone();
        Ok(ProposalKernel::new(
            true,
            move |from: &[f64], rng: &mut RngStream| {
                from.iter()
                    .zip(&sample_scales)
                    .map(|(x, s)| x + s * rng.standard_normal())
                    .collect()
            },
            move |from: &[f64], to: &[f64]| {
                from.iter()
                    .zip(to)
                    .zip(&scales)
                    .map(|((x, y), s)| {
                        log_pdf_normal(y - x, 0.0, *s).expect("validated walk scale")
                    })
                    .sum()
            },
        ))
    }

    /// On integer states: move one step left or right with probability ½.
    /// Off-grid proposals are left to the target's zero density to veto.
    pub fn nearest_neighbor() -> Self {
        ProposalKernel::new(
            true,
            |from: &[f64], rng: &mut RngStream| {
                let step = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                vec![from[0] + step]
            },
            |from: &[f64], to: &[f64]| {
                if (to[0] - from[0]).abs() == 1.0 {
                    0.5_f64.ln()
                } else {
                    f64::NEG_INFINITY
                }
            },
        )
    }
}

fn validate_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(invalid_parameter("walk needs at least one scale"));
    }
    if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(invalid_parameter(format!(
            "walk scales must be positive and finite, got {scales:?}"
        )));
    }
    Ok(())
}

/// log of the Hastings ratio from its two sides, with the zero-density
/// escape rules: numerator zero → −∞ (reject), else denominator zero →
/// +∞ (accept). Never NaN for finite-or-−∞ inputs.
pub fn hastings_log_ratio(log_numerator: f64, log_denominator: f64) -> f64 {
    if log_numerator == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if log_denominator == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        log_numerator - log_denominator
    }
}

/// Acceptance probability min{1, exp(log ratio)}.
pub fn accept_probability(log_ratio: f64) -> f64 {
    log_ratio.exp().min(1.0)
}

/// One accept/reject decision. Always consumes exactly one uniform.
pub fn metropolis_decision(log_ratio: f64, rng: &mut RngStream) -> bool {
    let u = rng.uniform();
    debug_assert!(!log_ratio.is_nan(), "acceptance ratio is NaN");
    u.ln() < log_ratio
}

/// The log acceptance ratio mh_step would use for the move from → to,
/// re-evaluating the target at both ends. Intended for transition-matrix
/// oracles and ratio tests, not for running chains.
pub fn log_accept_ratio(
    target: &TargetModel,
    proposal: &ProposalKernel,
    from: &[f64],
    to: &[f64],
) -> f64 {
    let log_from = target.log_density(from).value();
    let log_to = target.log_density(to).value();
    let (num, den) = if proposal.is_symmetric() {
        (log_to, log_from)
    } else {
        (
            log_to + proposal.log_density(to, from),
            log_from + proposal.log_density(from, to),
        )
    };
    hastings_log_ratio(num, den)
}

fn ensure_finite_position(position: &[f64], iteration: u64) -> Result<()> {
    if position.iter().any(|v| !v.is_finite()) {
        return Err(Error::KernelFailure {
            iteration,
            message: format!("proposal produced a non-finite position {position:?}"),
        });
    }
    Ok(())
}

// One accept/reject against the exact target. Leaves `iteration`
// untouched; callers decide what counts as a full step.
fn mh_transition(
    state: &ChainState,
    target: &TargetModel,
    proposal: &ProposalKernel,
    rng: &mut RngStream,
) -> Result<(ChainState, bool)> {
    let proposed = proposal.sample(&state.position, rng);
    ensure_finite_position(&proposed, state.iteration)?;
    let log_target_proposed = target.log_density(&proposed);
    let (num, den) = if proposal.is_symmetric() {
        (log_target_proposed.value(), state.log_target.value())
    } else {
        (
            log_target_proposed.value() + proposal.log_density(&proposed, &state.position),
            state.log_target.value() + proposal.log_density(&state.position, &proposed),
        )
    };
    let accept = metropolis_decision(hastings_log_ratio(num, den), rng);
    let next = if accept {
        ChainState {
            position: proposed,
            log_target: log_target_proposed,
            log_estimate: state.log_estimate,
            iteration: state.iteration,
        }
    } else {
        state.clone()
    };
    Ok((next, accept))
}

/// One Metropolis-Hastings step: propose, evaluate the (possibly
/// asymmetric) ratio, accept or stay.
pub fn mh_step(
    state: &ChainState,
    target: &TargetModel,
    proposal: &ProposalKernel,
    rng: &mut RngStream,
) -> Result<(ChainState, bool)> {
    let (mut next, accept) = mh_transition(state, target, proposal, rng)?;
    next.iteration = state.iteration + 1;
    Ok((next, accept))
}

/// The shape of a random-walk perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkKind {
    Uniform,
    Gaussian,
}

/// A configured random-walk proposal, one scale per coordinate.
#[derive(Debug, Clone)]
pub struct RandomWalk {
    kernel: ProposalKernel,
    kind: WalkKind,
    scales: Vec<f64>,
}

impl RandomWalk {
    pub fn new(kind: WalkKind, scales: Vec<f64>) -> Result<Self> {
        let kernel = match kind {
            WalkKind::Uniform => ProposalKernel::uniform_walk(scales.clone())?,
            WalkKind::Gaussian => ProposalKernel::gaussian_walk(scales.clone())?,
        };
        Ok(RandomWalk {
            kernel,
            kind,
            scales,
        })
    }

    /// One shared scale across `dim` coordinates.
    pub fn isotropic(kind: WalkKind, dim: usize, scale: f64) -> Result<Self> {
        Self::new(kind, vec![scale; dim])
    }

    pub fn kernel(&self) -> &ProposalKernel {
        &self.kernel
    }

    pub fn kind(&self) -> WalkKind {
        self.kind
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}

/// Random-walk Metropolis: mh_step with the walk's symmetric kernel, so
/// the q terms drop out of the ratio.
pub fn rwm_step(
    state: &ChainState,
    target: &TargetModel,
    walk: &RandomWalk,
    rng: &mut RngStream,
) -> Result<(ChainState, bool)> {
    mh_step(state, target, walk.kernel(), rng)
}

/// One within-Gibbs sweep: each block proposal is accepted or rejected
/// against the full joint target in the declared order. Returns one
/// accept flag per block; `iteration` advances once per sweep.
pub fn within_gibbs_step(
    state: &ChainState,
    target: &TargetModel,
    block_proposals: &[ProposalKernel],
    rng: &mut RngStream,
) -> Result<(ChainState, Vec<bool>)> {
    if block_proposals.is_empty() {
        return Err(invalid_argument("within-Gibbs sweep needs at least one block"));
    }
    let mut current = state.clone();
    let mut flags = Vec::with_capacity(block_proposals.len());
    for proposal in block_proposals {
        let (next, accept) = mh_transition(&current, target, proposal, rng)?;
        current = next;
        flags.push(accept);
    }
    current.iteration = state.iteration + 1;
    Ok((current, flags))
}

// ── Mixture-posterior proposals ──
//
// The two-parameter mixture posterior over (λ, α) moves by a log-normal
// step in λ whose spread grows with |log λ|, and a Beta step in α
// centred near the current value. Both are asymmetric, so the general
// ratio applies; the log-normal density includes the log(λ′/λ) Jacobian.

fn lambda_proposal_sd(delta: f64, lambda: f64) -> f64 {
    (delta * (1.0 + lambda.ln().powi(2))).sqrt()
}

fn draw_lambda(lambda: f64, delta: f64, rng: &mut RngStream) -> f64 {
    (lambda.ln() + lambda_proposal_sd(delta, lambda) * rng.standard_normal()).exp()
}

fn lambda_move_log_density(from: f64, to: f64, delta: f64) -> f64 {
    if !(from > 0.0) || !(to > 0.0) {
        return f64::NEG_INFINITY;
    }
    let sd = lambda_proposal_sd(delta, from);
    log_pdf_normal(to.ln(), from.ln(), sd).expect("positive proposal sd") - to.ln()
}

fn alpha_proposal_shapes(eps: f64, alpha: f64) -> (f64, f64) {
    (1.0 + eps * alpha, 1.0 + eps * (1.0 - alpha))
}

fn draw_alpha(alpha: f64, eps: f64, rng: &mut RngStream) -> f64 {
    let (a, b) = alpha_proposal_shapes(eps, alpha);
    rand_distr::Beta::new(a, b)
        .expect("shapes are ≥ 1 by construction")
        .sample(rng)
}

fn alpha_move_log_density(from: f64, to: f64, eps: f64) -> f64 {
    let (a, b) = alpha_proposal_shapes(eps, from);
    log_pdf_beta(to, a, b).expect("shapes are ≥ 1 by construction")
}

fn validate_mixture_tuning(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() || !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid_parameter(format!(
            "mixture proposal tuning must be positive and finite, got eps {eps}, delta {delta}"
        )));
    }
    Ok(())
}

/// λ-block proposal for the mixture posterior (position `[λ, α]`).
pub fn mixture_lambda_block(delta: f64) -> Result<ProposalKernel> {
    validate_mixture_tuning(1.0, delta)?;
    Ok(ProposalKernel::new(
        false,
        move |from: &[f64], rng: &mut RngStream| {
            vec![draw_lambda(from[0], delta, rng), from[1]]
        },
        move |from: &[f64], to: &[f64]| lambda_move_log_density(from[0], to[0], delta),
    ))
}

/// α-block proposal for the mixture posterior (position `[λ, α]`).
pub fn mixture_alpha_block(eps: f64) -> Result<ProposalKernel> {
    validate_mixture_tuning(eps, 1.0)?;
    Ok(ProposalKernel::new(
        false,
        move |from: &[f64], rng: &mut RngStream| {
            vec![from[0], draw_alpha(from[1], eps, rng)]
        },
        move |from: &[f64], to: &[f64]| alpha_move_log_density(from[1], to[1], eps),
    ))
}

/// The within-Gibbs blocks for the mixture posterior, in the fixed scan
/// order λ then α.
pub fn mixture_gibbs_blocks(eps: f64, delta: f64) -> Result<Vec<ProposalKernel>> {
    Ok(vec![mixture_lambda_block(delta)?, mixture_alpha_block(eps)?])
}

/// Joint two-dimensional proposal: the λ and α moves drawn together
/// (λ first), densities summed.
pub fn mixture_joint_kernel(eps: f64, delta: f64) -> Result<ProposalKernel> {
    validate_mixture_tuning(eps, delta)?;
    Ok(ProposalKernel::new(
        false,
        move |from: &[f64], rng: &mut RngStream| {
            let lambda = draw_lambda(from[0], delta, rng);
            let alpha = draw_alpha(from[1], eps, rng);
            vec![lambda, alpha]
        },
        move |from: &[f64], to: &[f64]| {
            lambda_move_log_density(from[0], to[0], delta)
                + alpha_move_log_density(from[1], to[1], eps)
        },
    ))
}

/// A drawn joint mixture move with its two directional log densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProposal {
    pub lambda: f64,
    pub alpha: f64,
    /// log q((λ′,α′) | (λ,α))
    pub log_forward: f64,
    /// log q((λ,α) | (λ′,α′))
    pub log_backward: f64,
}

/// Draw one joint mixture move and report both directional densities,
/// ready for the general Hastings ratio.
pub fn mixture_joint_proposal(
    lambda: f64,
    alpha: f64,
    eps: f64,
    delta: f64,
    rng: &mut RngStream,
) -> Result<PairProposal> {
    validate_mixture_tuning(eps, delta)?;
    if !(lambda > 0.0) || !lambda.is_finite() || !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid_parameter(format!(
            "joint mixture move needs lambda > 0 and alpha in (0,1), got ({lambda}, {alpha})"
        )));
    }
    let lambda_new = draw_lambda(lambda, delta, rng);
    let alpha_new = draw_alpha(alpha, eps, rng);
    let log_forward = lambda_move_log_density(lambda, lambda_new, delta)
        + alpha_move_log_density(alpha, alpha_new, eps);
    let log_backward = lambda_move_log_density(lambda_new, lambda, delta)
        + alpha_move_log_density(alpha_new, alpha, eps);
    Ok(PairProposal {
        lambda: lambda_new,
        alpha: alpha_new,
        log_forward,
        log_backward,
    })
}

// ── Pseudo-marginal Metropolis-Hastings ──

fn validate_log_estimate(value: f64) -> Result<f64> {
    if value.is_nan() || value == f64::INFINITY {
        return Err(Error::EstimatorContract(format!(
            "log estimate must be finite or -inf, got {value}"
        )));
    }
    Ok(value)
}

/// Build the starting state of a pseudo-marginal chain, drawing the
/// initial log estimate of π̃ at `position`.
pub fn init_pseudo_marginal_state<F>(
    position: Vec<f64>,
    estimator: F,
    rng: &mut RngStream,
) -> Result<ChainState>
where
    F: Fn(&[f64], &mut RngStream) -> Result<f64>,
{
    let estimate = validate_log_estimate(estimator(&position, rng)?)?;
    Ok(ChainState {
        log_target: LogDensity::new(estimate),
        log_estimate: Some(estimate),
        position,
        iteration: 0,
    })
}

/// One pseudo-marginal step: draw θ′, draw a fresh log estimate of
/// π̃(θ′), and accept with the estimated ratio. The current estimate is
/// reused as-is; it is never redrawn at the current point, which is
/// exactly what keeps the extended chain exact.
pub fn pseudo_marginal_step<F>(
    state: &ChainState,
    estimator: F,
    proposal: &ProposalKernel,
    rng: &mut RngStream,
) -> Result<(ChainState, bool)>
where
    F: Fn(&[f64], &mut RngStream) -> Result<f64>,
{
    let current_estimate = state.log_estimate.ok_or_else(|| {
        invalid_argument(
            "pseudo-marginal step needs a cached log estimate; \
             build the state with init_pseudo_marginal_state",
        )
    })?;
    let proposed = proposal.sample(&state.position, rng);
    ensure_finite_position(&proposed, state.iteration)?;
    let proposed_estimate = validate_log_estimate(estimator(&proposed, rng)?)?;
    let (num, den) = if proposal.is_symmetric() {
        (proposed_estimate, current_estimate)
    } else {
        (
            proposed_estimate + proposal.log_density(&proposed, &state.position),
            current_estimate + proposal.log_density(&state.position, &proposed),
        )
    };
    let accept = metropolis_decision(hastings_log_ratio(num, den), rng);
    let next = if accept {
        ChainState {
            position: proposed,
            log_target: LogDensity::new(proposed_estimate),
            log_estimate: Some(proposed_estimate),
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
