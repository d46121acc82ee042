//! # mhlab
//!
//! A compact Markov chain Monte Carlo engine built around the
//! Metropolis-Hastings transition and its main extensions:
//!
//! - random-walk Metropolis (uniform or Gaussian perturbations),
//! - Metropolis-within-Gibbs block updates,
//! - the Metropolis-adjusted Langevin algorithm (MALA),
//! - Hamiltonian Monte Carlo with a leapfrog integrator,
//! - pseudo-marginal Metropolis-Hastings with estimate recycling,
//! - particle MCMC on hidden Markov models via a bootstrap filter.
//!
//! Chains are measured with standard diagnostics (acceptance rate,
//! autocorrelation, effective sample size, Monte Carlo standard error,
//! subsampling lag) and proposal scales can be calibrated in a warm-up
//! phase with a diminishing-adaptation schedule.
//!
//! Everything is deterministic under a fixed seed: chains draw from
//! explicitly seeded [`stream::RngStream`] values and density arithmetic
//! stays in log space throughout.
//!
//! ## Example: random-walk Metropolis on a bimodal 1-d target
//!
//! ```rust
//! use mhlab::kernel::{rwm_step, ChainState, RandomWalk, WalkKind};
//! use mhlab::stream::RngStream;
//! use mhlab::target::toy_sin_target;
//!
//! let target = toy_sin_target();
//! let walk = RandomWalk::new(WalkKind::Uniform, vec![1.0]).unwrap();
//! let mut rng = RngStream::new(42);
//! let mut state = ChainState::init(vec![3.14], &target);
//! let mut accepted = 0usize;
//! for _ in 0..1000 {
//!     let (next, accept) = rwm_step(&state, &target, &walk, &mut rng).unwrap();
//!     state = next;
//!     accepted += accept as usize;
//! }
//! assert!(accepted > 0);
//! ```

pub mod adapt;
pub mod config;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod hamiltonian;
pub mod kernel;
pub mod logdomain;
pub mod mixture;
pub mod particle;
pub mod runner;
pub mod stream;
pub mod target;
pub mod trace;

pub use error::{Error, Result};
