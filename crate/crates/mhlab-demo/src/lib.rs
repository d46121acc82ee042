//! WebAssembly surface for the in-browser playground. Each export runs
//! a short seeded experiment and returns a JSON string the page can
//! plot directly; all heavy lifting stays in the core crate.
//!
//! The same functions compile and run natively, which is how the test
//! suite exercises them without a wasm toolchain.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use mhlab::hamiltonian::{hmc_step, HmcSettings};
use mhlab::kernel::{rwm_step, within_gibbs_step, ChainState, RandomWalk, WalkKind};
use mhlab::mixture::{mixture_target, MixtureData};
use mhlab::runner::histogram_table;
use mhlab::stream::RngStream;
use mhlab::target::{gaussian_target, toy_sin_target};

/// The Poisson counts shipped with the repository, embedded so the
/// browser build needs no file system.
const MIXTURE_COUNTS: &str = include_str!("../../../data/poisson123.txt");

#[derive(Serialize)]
struct ToyChainSummary {
    scale: f64,
    chain_length: usize,
    acceptance_rate: f64,
    ess: Option<f64>,
    /// Thinned trajectory for the trace plot (at most 2000 points).
    trail: Vec<f64>,
    bin_centers: Vec<f64>,
    empirical_density: Vec<f64>,
    reference_density: Vec<f64>,
    total_variation: f64,
}

/// Random-walk chain on the oscillating toy density. Returns histogram
/// versus the exact (quadrature-normalized) density plus mixing stats.
#[wasm_bindgen]
pub fn toy_chain_summary(scale: f64, chain_length: usize, seed: u64) -> String {
    match toy_chain_summary_impl(scale, chain_length, seed) {
        Ok(json) => json,
        Err(e) => error_json(&e.to_string()),
    }
}

fn toy_chain_summary_impl(
    scale: f64,
    chain_length: usize,
    seed: u64,
) -> mhlab::Result<String> {
    let chain_length = chain_length.clamp(100, 200_000);
    let target = toy_sin_target();
    let walk = RandomWalk::isotropic(WalkKind::Uniform, 1, scale)?;
    let mut state = ChainState::init(vec![3.14], &target);
    let mut rng = RngStream::new(seed);
    let mut xs = Vec::with_capacity(chain_length);
    let mut accepted = 0usize;
    for _ in 0..chain_length {
        let (next, accept) = rwm_step(&state, &target, &walk, &mut rng)?;
        state = next;
        accepted += accept as usize;
        xs.push(state.position[0]);
    }
    let table = histogram_table(&xs, 50, -4.0, 4.0, Some(&target))?;
    let thin = (xs.len() / 2000).max(1);
    let summary = ToyChainSummary {
        scale,
        chain_length,
        acceptance_rate: accepted as f64 / chain_length as f64,
        ess: mhlab::diagnostics::effective_sample_size(&xs)
            .ok()
            .map(|(ess, _)| ess),
        trail: xs.iter().step_by(thin).copied().collect(),
        bin_centers: table.centers.clone(),
        empirical_density: table.densities.clone(),
        reference_density: table.reference.clone().unwrap(),
        total_variation: table.total_variation().unwrap(),
    };
    Ok(serde_json::to_string(&summary).expect("serializable summary"))
}

#[derive(Serialize)]
struct HmcSummary {
    step_size: f64,
    n_leapfrog: usize,
    acceptance_rate: f64,
    mean: [f64; 2],
    variance: [f64; 2],
    /// 2-d positions for the scatter plot (at most 2000 points).
    points: Vec<[f64; 2]>,
}

/// Hamiltonian sampler on a 2-d standard normal; returns the scatter
/// cloud and first two moments.
#[wasm_bindgen]
pub fn hmc_gaussian_demo(step_size: f64, n_leapfrog: usize, chain_length: usize, seed: u64) -> String {
    match hmc_gaussian_demo_impl(step_size, n_leapfrog, chain_length, seed) {
        Ok(json) => json,
        Err(e) => error_json(&e.to_string()),
    }
}

fn hmc_gaussian_demo_impl(
    step_size: f64,
    n_leapfrog: usize,
    chain_length: usize,
    seed: u64,
) -> mhlab::Result<String> {
    let chain_length = chain_length.clamp(100, 50_000);
    let target = gaussian_target(2);
    let settings = HmcSettings::unit_mass(step_size, n_leapfrog, 2)?;
    let mut state = ChainState::init(vec![0.0, 0.0], &target);
    let mut rng = RngStream::new(seed);
    let mut points = Vec::with_capacity(chain_length);
    let mut accepted = 0usize;
    for _ in 0..chain_length {
        let (next, accept) = hmc_step(&state, &target, &settings, &mut rng)?;
        state = next;
        accepted += accept as usize;
        points.push([state.position[0], state.position[1]]);
    }
    let mut mean = [0.0f64; 2];
    let mut variance = [0.0f64; 2];
    for c in 0..2 {
        let xs: Vec<f64> = points.iter().map(|p| p[c]).collect();
        mean[c] = xs.iter().sum::<f64>() / xs.len() as f64;
        variance[c] =
            xs.iter().map(|x| (x - mean[c]) * (x - mean[c])).sum::<f64>() / xs.len() as f64;
    }
    let thin = (points.len() / 2000).max(1);
    let summary = HmcSummary {
        step_size,
        n_leapfrog,
        acceptance_rate: accepted as f64 / chain_length as f64,
        mean,
        variance,
        points: points.iter().step_by(thin).copied().collect(),
    };
    Ok(serde_json::to_string(&summary).expect("serializable summary"))
}

#[derive(Serialize)]
struct MixtureSummary {
    chain_length: usize,
    acceptance_rate: f64,
    lambda_mean: f64,
    alpha_mean: f64,
    /// (lambda, alpha) posterior cloud (at most 2000 points, burn-in
    /// removed).
    points: Vec<[f64; 2]>,
}

/// Two-block Metropolis-within-Gibbs over the Poisson/Geometric mixture
/// posterior on the embedded 123-count dataset.
#[wasm_bindgen]
pub fn mixture_posterior_demo(eps: f64, delta: f64, chain_length: usize, seed: u64) -> String {
    match mixture_posterior_demo_impl(eps, delta, chain_length, seed) {
        Ok(json) => json,
        Err(e) => error_json(&e.to_string()),
    }
}

fn mixture_posterior_demo_impl(
    eps: f64,
    delta: f64,
    chain_length: usize,
    seed: u64,
) -> mhlab::Result<String> {
    let chain_length = chain_length.clamp(200, 100_000);
    let counts: Vec<u64> = MIXTURE_COUNTS
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse().expect("embedded dataset is well formed"))
        .collect();
    let target = mixture_target(MixtureData::from_observations(counts)?);
    let blocks = mhlab::kernel::mixture_gibbs_blocks(eps, delta)?;
    let mut state = ChainState::init(vec![1.0, 0.5], &target);
    let mut rng = RngStream::new(seed);
    let mut points = Vec::with_capacity(chain_length);
    let mut decisions = 0usize;
    let mut accepted = 0usize;
    for _ in 0..chain_length {
        let (next, flags) = within_gibbs_step(&state, &target, &blocks, &mut rng)?;
        state = next;
        decisions += flags.len();
        accepted += flags.iter().filter(|&&f| f).count();
        points.push([state.position[0], state.position[1]]);
    }
    let burn = chain_length / 10;
    let kept = &points[burn..];
    let lambda_mean = kept.iter().map(|p| p[0]).sum::<f64>() / kept.len() as f64;
    let alpha_mean = kept.iter().map(|p| p[1]).sum::<f64>() / kept.len() as f64;
    let thin = (kept.len() / 2000).max(1);
    let summary = MixtureSummary {
        chain_length,
        acceptance_rate: accepted as f64 / decisions as f64,
        lambda_mean,
        alpha_mean,
        points: kept.iter().step_by(thin).copied().collect(),
    };
    Ok(serde_json::to_string(&summary).expect("serializable summary"))
}

fn error_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}
