//! Warm-up calibration of proposal scales, then freezing.
//!
//! Scales drift toward a target acceptance rate under a Robbins-Monro
//! update on log scale: log_scale += γ_k·(rate − target) with
//! γ_k = min(1, 1/√k). The step sizes shrink to zero, so adaptation
//! diminishes; freezing makes the scales permanent and turns any further
//! adaptation attempt into an error. Sampling-phase kernels must run on
//! frozen scales only, otherwise the chain is not Markovian.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_argument, invalid_parameter, Error, Result};

/// Default drive point: one proposal in four accepted.
pub const DEFAULT_TARGET_RATE: f64 = 0.25;

/// Default steps between scale updates.
pub const DEFAULT_WINDOW: usize = 100;

/// Per-block proposal scales being tuned toward a target acceptance rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleAdaptor {
    log_scales: Vec<f64>,
    target_rate: f64,
    window: usize,
    adaptation_count: u64,
    frozen: bool,
}

impl ScaleAdaptor {
    pub fn new(initial_scales: &[f64], target_rate: f64, window: usize) -> Result<Self> {
        if initial_scales.is_empty() {
            return Err(invalid_parameter("adaptor needs at least one scale"));
        }
        if initial_scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(invalid_parameter(format!(
                "initial scales must be positive and finite, got {initial_scales:?}"
            )));
        }
        if !(target_rate > 0.0 && target_rate < 1.0) {
            return Err(invalid_parameter(format!(
                "target acceptance rate must lie in (0,1), got {target_rate}"
            )));
        }
        if window == 0 {
            return Err(invalid_parameter("window must be at least one step"));
        }
        Ok(ScaleAdaptor {
            log_scales: initial_scales.iter().map(|s| s.ln()).collect(),
            target_rate,
            window,
            adaptation_count: 0,
            frozen: false,
        })
    }

    /// One scale with the default 0.25 target and 100-step window.
    pub fn with_defaults(initial_scale: f64) -> Result<Self> {
        Self::new(&[initial_scale], DEFAULT_TARGET_RATE, DEFAULT_WINDOW)
    }

    pub fn scales(&self) -> Vec<f64> {
        self.log_scales.iter().map(|l| l.exp()).collect()
    }

    pub fn log_scales(&self) -> &[f64] {
        &self.log_scales
    }

    pub fn target_rate(&self) -> f64 {
        self.target_rate
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn adaptation_count(&self) -> u64 {
        self.adaptation_count
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// The k-th update magnitude bound, γ_k = min(1, 1/√k).
    pub fn gain(k: u64) -> f64 {
        (1.0 / (k as f64).sqrt()).min(1.0)
    }

    /// Nudges every block's log scale by γ_k·(rate − target), one rate
    /// per block. Counts as a single adaptation event.
    pub fn adapt_scale(&mut self, window_accept_rates: &[f64]) -> Result<()> {
        if self.frozen {
            return Err(Error::FrozenAdaptor);
        }
        if window_accept_rates.len() != self.log_scales.len() {
            return Err(invalid_argument(format!(
                "{} rates supplied for {} adapted blocks",
                window_accept_rates.len(),
                self.log_scales.len()
            )));
        }
        if window_accept_rates
            .iter()
            .any(|r| !(0.0..=1.0).contains(r))
        {
            return Err(invalid_argument(format!(
                "acceptance rates must lie in [0,1], got {window_accept_rates:?}"
            )));
        }
        let gain = Self::gain(self.adaptation_count + 1);
        for (log_scale, rate) in self.log_scales.iter_mut().zip(window_accept_rates) {
            *log_scale += gain * (rate - self.target_rate);
        }
        self.adaptation_count += 1;
        Ok(())
    }

    /// Locks the scales for the sampling phase. Idempotent.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

/// Streaming mean and scatter of visited points, for covariance-shaped
/// proposals built from the past sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAccumulator {
    count: u64,
    mean: Vec<f64>,
    scatter: Vec<Vec<f64>>,
}

/// Ridge added to the empirical covariance so it stays usable before
/// enough points have arrived.
pub const COVARIANCE_RIDGE: f64 = 1e-6;

impl CovarianceAccumulator {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid_parameter("covariance accumulator needs dimension >= 1"));
        }
        Ok(CovarianceAccumulator {
            count: 0,
            mean: vec![0.0; dim],
            scatter: vec![vec![0.0; dim]; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Welford update. The scatter increment is symmetrized so the
    /// stored matrix is exactly symmetric.
    pub fn update(&mut self, x: &[f64]) -> Result<()> {
        let d = self.dim();
        if x.len() != d {
            return Err(invalid_argument(format!(
                "point of dimension {} fed to a {d}-dimensional accumulator",
                x.len()
            )));
        }
        self.count += 1;
        let delta_old: Vec<f64> = x.iter().zip(&self.mean).map(|(xi, mi)| xi - mi).collect();
        for (mi, di) in self.mean.iter_mut().zip(&delta_old) {
            *mi += di / self.count as f64;
        }
        let delta_new: Vec<f64> = x.iter().zip(&self.mean).map(|(xi, mi)| xi - mi).collect();
        for i in 0..d {
            for j in 0..d {
                self.scatter[i][j] +=
                    0.5 * (delta_old[i] * delta_new[j] + delta_old[j] * delta_new[i]);
            }
        }
        Ok(())
    }

    /// Sample covariance plus the δI ridge. With fewer than two points
    /// the empirical part is zero and only the ridge remains.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut cov = vec![vec![0.0; d]; d];
        if self.count >= 2 {
            let denom = (self.count - 1) as f64;
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] = self.scatter[i][j] / denom;
                }
            }
        }
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] += COVARIANCE_RIDGE;
        }
        cov
    }
}

/// What the warm-up phase did, for inclusion in the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmupSummary {
    pub windows: usize,
    pub window_size: usize,
    pub target_rate: f64,
    pub initial_scales: Vec<f64>,
    pub final_scales: Vec<f64>,
    pub window_rates: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{rwm_step, ChainState, RandomWalk, WalkKind};
    use crate::stream::RngStream;
    use crate::target::toy_sin_target;

    #[test]
    fn matching_rate_leaves_the_scale_alone() {
        let mut adaptor = ScaleAdaptor::with_defaults(1.5).unwrap();
        let before = adaptor.log_scales()[0];
        adaptor.adapt_scale(&[0.25]).unwrap();
        assert_eq!(adaptor.log_scales()[0].to_bits(), before.to_bits());
        assert_eq!(adaptor.adaptation_count(), 1);
    }

    #[test]
    fn first_update_from_full_acceptance_is_exactly_three_quarters() {
        let mut adaptor = ScaleAdaptor::with_defaults(1.0).unwrap();
        adaptor.adapt_scale(&[1.0]).unwrap();
        assert_eq!(adaptor.log_scales()[0], 0.75);
    }

    #[test]
    fn updates_respect_the_diminishing_schedule() {
        let mut adaptor = ScaleAdaptor::with_defaults(0.5).unwrap();
        let mut rng = RngStream::new(3);
        let mut previous_gain = f64::INFINITY;
        for k in 1..=200u64 {
            let before = adaptor.log_scales()[0];
            let rate = rng.uniform();
            adaptor.adapt_scale(&[rate]).unwrap();
            let delta = (adaptor.log_scales()[0] - before).abs();
            let gain = ScaleAdaptor::gain(k);
            assert!(delta <= gain + 1e-15, "step {k}: |Δ| {delta} > γ {gain}");
            assert!(gain <= previous_gain);
            previous_gain = gain;
        }
        assert!(ScaleAdaptor::gain(1_000_000) < 1e-2);
    }

    #[test]
    fn frozen_adaptors_refuse_updates_and_freezing_is_idempotent() {
        let mut adaptor = ScaleAdaptor::with_defaults(1.0).unwrap();
        adaptor.adapt_scale(&[0.5]).unwrap();
        adaptor.freeze();
        let locked = adaptor.scales();
        assert!(matches!(adaptor.adapt_scale(&[0.9]), Err(Error::FrozenAdaptor)));
        adaptor.freeze();
        adaptor.freeze();
        assert!(adaptor.is_frozen());
        assert_eq!(adaptor.scales(), locked);
    }

    #[test]
    fn constructor_and_update_validation() {
        assert!(ScaleAdaptor::new(&[], 0.25, 100).is_err());
        assert!(ScaleAdaptor::new(&[0.0], 0.25, 100).is_err());
        assert!(ScaleAdaptor::new(&[1.0], 0.0, 100).is_err());
        assert!(ScaleAdaptor::new(&[1.0], 1.0, 100).is_err());
        assert!(ScaleAdaptor::new(&[1.0], 0.25, 0).is_err());
        let mut adaptor = ScaleAdaptor::new(&[1.0, 2.0], 0.25, 50).unwrap();
        assert!(adaptor.adapt_scale(&[0.5]).is_err());
        assert!(adaptor.adapt_scale(&[0.5, 1.5]).is_err());
        assert!(adaptor.adapt_scale(&[0.5, 0.1]).is_ok());
    }

    #[test]
    fn per_block_scales_move_independently() {
        let mut adaptor = ScaleAdaptor::new(&[1.0, 1.0], 0.25, 100).unwrap();
        adaptor.adapt_scale(&[1.0, 0.0]).unwrap();
        let scales = adaptor.scales();
        assert!(scales[0] > 1.0 && scales[1] < 1.0);
        assert_eq!(adaptor.log_scales()[0], 0.75);
        assert_eq!(adaptor.log_scales()[1], -0.25);
    }

    #[test]
    fn warmup_drives_the_toy_chain_toward_the_target_rate() {
        // Start far too small, adapt for 100 windows of 100 steps, then
        // measure the frozen kernel's acceptance on fresh draws.
        let target = toy_sin_target();
        let mut adaptor = ScaleAdaptor::new(&[0.1], 0.25, 100).unwrap();
        let mut rng = RngStream::with_stream(2024, 1);
        let mut state = ChainState::init(vec![3.14], &target);
        for _ in 0..100 {
            let walk = RandomWalk::new(WalkKind::Uniform, adaptor.scales()).unwrap();
            let mut accepted = 0usize;
            for _ in 0..adaptor.window() {
                let (next, accept) = rwm_step(&state, &target, &walk, &mut rng).unwrap();
                state = next;
                accepted += accept as usize;
            }
            adaptor
                .adapt_scale(&[accepted as f64 / adaptor.window() as f64])
                .unwrap();
        }
        adaptor.freeze();
        let walk = RandomWalk::new(WalkKind::Uniform, adaptor.scales()).unwrap();
        let mut measure_rng = RngStream::with_stream(2024, 0);
        let mut accepted = 0usize;
        let trial = 2_000;
        for _ in 0..trial {
            let (next, accept) = rwm_step(&state, &target, &walk, &mut measure_rng).unwrap();
            state = next;
            accepted += accept as usize;
        }
        let rate = accepted as f64 / trial as f64;
        assert!(
            (0.15..=0.35).contains(&rate),
            "post-warm-up acceptance {rate} with scale {:?}",
            adaptor.scales()
        );
    }

    #[test]
    fn two_point_covariance_matches_the_hand_formula() {
        let mut acc = CovarianceAccumulator::new(2).unwrap();
        acc.update(&[0.0, 0.0]).unwrap();
        acc.update(&[2.0, 0.0]).unwrap();
        assert_eq!(acc.mean(), &[1.0, 0.0]);
        let cov = acc.covariance();
        assert!((cov[0][0] - (2.0 + COVARIANCE_RIDGE)).abs() < 1e-15);
        assert_eq!(cov[0][1], 0.0);
        assert_eq!(cov[1][0], 0.0);
        assert!((cov[1][1] - COVARIANCE_RIDGE).abs() < 1e-20);
    }

    #[test]
    fn single_point_gives_the_ridge_only() {
        let mut acc = CovarianceAccumulator::new(3).unwrap();
        acc.update(&[5.0, -1.0, 2.0]).unwrap();
        let cov = acc.covariance();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { COVARIANCE_RIDGE } else { 0.0 };
                assert_eq!(cov[i][j], expected);
            }
        }
    }

    #[test]
    fn recovers_a_diagonal_covariance_from_samples() {
        let mut acc = CovarianceAccumulator::new(2).unwrap();
        let mut rng = RngStream::new(55);
        for _ in 0..10_000 {
            let x = [rng.standard_normal(), 2.0 * rng.standard_normal()];
            acc.update(&x).unwrap();
        }
        let cov = acc.covariance();
        let truth = [[1.0, 0.0], [0.0, 4.0]];
        let mut frob = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                frob += (cov[i][j] - truth[i][j]).powi(2);
            }
        }
        assert!(frob.sqrt() < 0.15, "Frobenius distance {}", frob.sqrt());
    }

    #[test]
    fn scatter_stays_symmetric_and_nearly_positive() {
        let mut acc = CovarianceAccumulator::new(3).unwrap();
        let mut rng = RngStream::new(77);
        for _ in 0..500 {
            let z0 = rng.standard_normal();
            let x = [z0, 0.5 * z0 + rng.standard_normal(), rng.standard_normal()];
            acc.update(&x).unwrap();
        }
        let cov = acc.covariance();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(cov[i][j].to_bits(), cov[j][i].to_bits());
            }
        }
        // Quadratic forms on random directions stay PSD after the ridge.
        for _ in 0..200 {
            let v: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
            let mut quad = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    quad += v[i] * cov[i][j] * v[j];
                }
            }
            assert!(quad >= -1e-10, "quadratic form {quad}");
        }
    }

    #[test]
    fn accumulator_validation() {
        assert!(CovarianceAccumulator::new(0).is_err());
        let mut acc = CovarianceAccumulator::new(2).unwrap();
        assert!(acc.update(&[1.0]).is_err());
        assert!(acc.update(&[1.0, 2.0, 3.0]).is_err());
    }
}
