//! Chain-quality measurement: autocorrelation, effective sample size,
//! Monte Carlo standard error, and subsampling lag.
//!
//! The effective sample size is T/κ where κ = 1 + 2Σρ_t is estimated by
//! Geyer's initial-positive-sequence rule: consecutive-lag pairs of the
//! autocorrelation are summed while each pair total stays positive. κ is
//! clamped at 1 from below, which keeps ess within (0, T].
//!
//! Everything here is a pure function of an immutable series or trace;
//! identical input produces a bit-identical report.

use serde::{Deserialize, Serialize};

use crate::adapt::WarmupSummary;
use crate::error::{invalid_argument, Error, Result};
use crate::trace::Trace;

/// Fraction of a chain dropped from the front by default.
pub fn default_burn_in(chain_length: usize) -> usize {
    chain_length / 10
}

/// Lags reported when the caller does not pick their own.
pub const DEFAULT_LAGS: [usize; 9] = [0, 1, 2, 3, 4, 5, 10, 20, 50];

/// Mean of h over the post-burn-in part of a trace.
pub fn empirical_mean<H>(trace: &Trace, h: H, burn_in: usize) -> Result<f64>
where
    H: Fn(&[f64]) -> f64,
{
    if burn_in >= trace.len() {
        return Err(invalid_argument(format!(
            "burn-in {burn_in} leaves no samples from a chain of length {}",
            trace.len()
        )));
    }
    let rows = &trace.positions[burn_in..];
    Ok(rows.iter().map(|row| h(row)).sum::<f64>() / rows.len() as f64)
}

fn series_mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Autocovariance at one lag with the 1/n normalization.
fn autocovariance(series: &[f64], mean: f64, lag: usize) -> f64 {
    let n = series.len();
    let mut acc = 0.0;
    for t in 0..n - lag {
        acc += (series[t] - mean) * (series[t + lag] - mean);
    }
    acc / n as f64
}

fn variance_checked(series: &[f64], mean: f64) -> Result<f64> {
    let c0 = autocovariance(series, mean, 0);
    if !c0.is_finite() {
        return Err(Error::DegenerateSeries(format!(
            "series variance is not finite ({c0})"
        )));
    }
    if c0 == 0.0 {
        return Err(Error::DegenerateSeries(
            "series has zero variance".to_string(),
        ));
    }
    Ok(c0)
}

/// Sample autocorrelation at each requested lag. Lag 0 is exactly 1.
pub fn autocorr(series: &[f64], lags: &[usize]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(invalid_argument("autocorrelation of an empty series"));
    }
    if let Some(&max_lag) = lags.iter().max() {
        if max_lag >= series.len() {
            return Err(invalid_argument(format!(
                "lag {max_lag} out of range for a series of length {}",
                series.len()
            )));
        }
    }
    let mean = series_mean(series);
    let c0 = variance_checked(series, mean)?;
    Ok(lags
        .iter()
        .map(|&lag| {
            if lag == 0 {
                1.0
            } else {
                autocovariance(series, mean, lag) / c0
            }
        })
        .collect())
}

/// (ess, kappa) for one series. κ comes from the initial-positive-sequence
/// truncation of 1 + 2Σρ_t and is clamped at 1, so ess = T/κ lies in (0, T].
pub fn effective_sample_size(series: &[f64]) -> Result<(f64, f64)> {
    let n = series.len();
    if n < 10 {
        return Err(invalid_argument(format!(
            "effective sample size needs at least 10 points, got {n}"
        )));
    }
    let mean = series_mean(series);
    let c0 = variance_checked(series, mean)?;
    let rho = |lag: usize| autocovariance(series, mean, lag) / c0;

    // Sum Γ_k = ρ(2k) + ρ(2k+1) while positive. ΣΓ over kept pairs equals
    // (1 + κ)/2, so κ = 2ΣΓ − 1.
    let mut pair_sum = 0.0;
    let mut k = 0usize;
    loop {
        let even = 2 * k;
        let odd = even + 1;
        if odd >= n {
            break;
        }
        let gamma = rho(even) + rho(odd);
        if gamma <= 0.0 {
            break;
        }
        pair_sum += gamma;
        k += 1;
    }
    let kappa = (2.0 * pair_sum - 1.0).max(1.0);
    let ess = n as f64 / kappa;
    Ok((ess, kappa))
}

/// Standard error of the empirical mean: sqrt(variance × κ / T).
pub fn mc_standard_error(series: &[f64]) -> Result<f64> {
    let (_, kappa) = effective_sample_size(series)?;
    let mean = series_mean(series);
    let c0 = variance_checked(series, mean)?;
    Ok((c0 * kappa / series.len() as f64).sqrt())
}

/// A thinning interval and whether it hit the T/10 cap before the
/// autocorrelation dropped below the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsampleLag {
    pub lag: usize,
    pub capped: bool,
}

/// Smallest lag G with |acf(G)| below the threshold, capped at T/10.
pub fn subsample_lag(series: &[f64], threshold: f64) -> Result<SubsampleLag> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(invalid_argument(format!(
            "subsample threshold must be positive and finite, got {threshold}"
        )));
    }
    let n = series.len();
    if n < 10 {
        return Err(invalid_argument(format!(
            "subsampling lag needs at least 10 points, got {n}"
        )));
    }
    let mean = series_mean(series);
    let c0 = variance_checked(series, mean)?;
    let cap = (n / 10).max(1);
    for lag in 1..=cap {
        if (autocovariance(series, mean, lag) / c0).abs() < threshold {
            return Ok(SubsampleLag { lag, capped: false });
        }
    }
    Ok(SubsampleLag { lag: cap, capped: true })
}

/// One autocorrelation value at one lag, kept as a pair so the JSON form
/// has a stable order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcfPoint {
    pub lag: usize,
    pub value: f64,
}

/// Per-coordinate summary. Fields that need more data than the chain
/// provides are null rather than fabricated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordDiagnostics {
    pub name: String,
    pub mean: f64,
    pub variance: Option<f64>,
    pub acf: Vec<AcfPoint>,
    pub ess: Option<f64>,
    pub kappa: Option<f64>,
    pub mcse: Option<f64>,
    pub subsample_lag: Option<usize>,
    pub subsample_capped: Option<bool>,
}

/// Whole-chain report. Serialized with this exact field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub format_version: u32,
    pub kernel_label: String,
    pub seed: u64,
    pub chain_length: usize,
    pub burn_in_used: usize,
    pub acceptance_rate: f64,
    pub coordinates: Vec<CoordDiagnostics>,
    pub min_ess: Option<f64>,
    pub subsample_lag: Option<usize>,
    pub subsample_capped: bool,
    pub warmup: Option<WarmupSummary>,
    pub warnings: Vec<String>,
}

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Diagnostics for every coordinate of a trace. Degenerate or too-short
/// series produce null fields plus a warning instead of an error; the
/// summary subsample lag is the maximum over coordinates.
pub fn compute_report(trace: &Trace, burn_in: usize, lags: &[usize]) -> Result<DiagnosticsReport> {
    trace.validate()?;
    if burn_in >= trace.len() {
        return Err(invalid_argument(format!(
            "burn-in {burn_in} leaves no samples from a chain of length {}",
            trace.len()
        )));
    }
    let mut warnings = Vec::new();
    let mut coordinates = Vec::with_capacity(trace.dim());
    let kept = trace.len() - burn_in;
    let usable_lags: Vec<usize> = lags.iter().copied().filter(|&l| l < kept).collect();
    if usable_lags.len() < lags.len() {
        warnings.push(format!(
            "dropped {} requested lags beyond the {} kept samples",
            lags.len() - usable_lags.len(),
            kept
        ));
    }

    for (index, name) in trace.coord_names.iter().enumerate() {
        let series: Vec<f64> = trace.positions[burn_in..]
            .iter()
            .map(|row| row[index])
            .collect();
        let mean = series_mean(&series);
        let mut coord = CoordDiagnostics {
            name: name.clone(),
            mean,
            variance: None,
            acf: Vec::new(),
            ess: None,
            kappa: None,
            mcse: None,
            subsample_lag: None,
            subsample_capped: None,
        };
        match variance_checked(&series, mean) {
            Ok(c0) => coord.variance = Some(c0),
            Err(e) => {
                warnings.push(format!("{name}: {e}"));
                coordinates.push(coord);
                continue;
            }
        }
        match autocorr(&series, &usable_lags) {
            Ok(values) => {
                coord.acf = usable_lags
                    .iter()
                    .zip(values)
                    .map(|(&lag, value)| AcfPoint { lag, value })
                    .collect();
            }
            Err(e) => warnings.push(format!("{name}: {e}")),
        }
        match effective_sample_size(&series) {
            Ok((ess, kappa)) => {
                coord.ess = Some(ess);
                coord.kappa = Some(kappa);
                coord.mcse = Some(mc_standard_error(&series)?);
            }
            Err(e) => warnings.push(format!("{name}: {e}")),
        }
        match subsample_lag(&series, 0.1) {
            Ok(s) => {
                coord.subsample_lag = Some(s.lag);
                coord.subsample_capped = Some(s.capped);
            }
            Err(e) => warnings.push(format!("{name}: {e}")),
        }
        coordinates.push(coord);
    }

    let min_ess = coordinates
        .iter()
        .filter_map(|c| c.ess)
        .min_by(|a, b| a.total_cmp(b));
    let subsample = coordinates
        .iter()
        .filter_map(|c| c.subsample_lag)
        .max();
    let subsample_capped = coordinates
        .iter()
        .any(|c| c.subsample_capped == Some(true));

    Ok(DiagnosticsReport {
        format_version: REPORT_FORMAT_VERSION,
        kernel_label: trace.kernel_label.clone(),
        seed: trace.seed,
        chain_length: trace.len(),
        burn_in_used: burn_in,
        acceptance_rate: trace.acceptance_rate(),
        coordinates,
        min_ess,
        subsample_lag: subsample,
        subsample_capped,
        warmup: None,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logdomain::LogDensity;
    use crate::stream::RngStream;

    fn iid_normal(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed);
        (0..n).map(|_| rng.standard_normal()).collect()
    }

    // Stationary AR(1) with unit marginal variance.
    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed);
        let innovation_sd = (1.0 - phi * phi).sqrt();
        let mut x = rng.standard_normal();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(x);
            x = phi * x + innovation_sd * rng.standard_normal();
        }
        out
    }

    fn constant_trace(value: f64, t: usize) -> Trace {
        let mut trace = Trace::new("const", 0, vec!["x".to_string()]);
        trace.push(&[value], LogDensity::new(0.0), &[true]);
        for _ in 1..t {
            trace.push(&[value], LogDensity::new(0.0), &[false]);
        }
        trace
    }

    fn series_trace(series: &[f64]) -> Trace {
        let mut trace = Trace::new("series", 0, vec!["x".to_string()]);
        for &v in series {
            trace.push(&[v], LogDensity::new(0.0), &[true]);
        }
        trace
    }

    #[test]
    fn mean_of_a_constant_chain_is_the_constant() {
        let trace = constant_trace(2.75, 40);
        assert_eq!(empirical_mean(&trace, |x| x[0], 0).unwrap(), 2.75);
        assert_eq!(empirical_mean(&trace, |x| x[0], 20).unwrap(), 2.75);
        assert!(empirical_mean(&trace, |x| x[0], 40).is_err());
    }

    #[test]
    fn burn_in_choice_does_not_move_a_stationary_mean() {
        let series = iid_normal(20_000, 5);
        let trace = series_trace(&series);
        let full = empirical_mean(&trace, |x| x[0], 0).unwrap();
        let late = empirical_mean(&trace, |x| x[0], 10_000).unwrap();
        let mcse_full = mc_standard_error(&series).unwrap();
        let mcse_late = mc_standard_error(&series[10_000..]).unwrap();
        let combined = (mcse_full.powi(2) + mcse_late.powi(2)).sqrt();
        assert!(
            (full - late).abs() < 3.0 * combined,
            "means {full} vs {late} differ by more than 3 combined MCSEs"
        );
    }

    #[test]
    fn acf_of_iid_noise_is_small() {
        let series = iid_normal(10_000, 11);
        let acf = autocorr(&series, &[0, 1]).unwrap();
        assert_eq!(acf[0], 1.0);
        assert!(acf[1].abs() < 0.03, "lag-1 acf {}", acf[1]);
    }

    #[test]
    fn acf_matches_the_ar1_closed_form() {
        let series = ar1(0.5, 100_000, 17);
        let acf = autocorr(&series, &[1, 5]).unwrap();
        assert!((acf[0] - 0.5).abs() < 0.01, "lag-1 acf {}", acf[0]);
        assert!((acf[1] - 0.03125).abs() < 0.01, "lag-5 acf {}", acf[1]);
    }

    #[test]
    fn acf_input_validation() {
        assert!(autocorr(&[], &[0]).is_err());
        assert!(autocorr(&[1.0, 2.0], &[2]).is_err());
        assert!(matches!(
            autocorr(&[3.0; 50], &[1]),
            Err(Error::DegenerateSeries(_))
        ));
    }

    #[test]
    fn acf_is_invariant_under_affine_maps() {
        let series = ar1(0.7, 2_000, 23);
        let lags = [0, 1, 2, 5, 10];
        let base = autocorr(&series, &lags).unwrap();
        // Scaling by a power of two is exact arithmetic, so the match
        // is bitwise.
        let doubled: Vec<f64> = series.iter().map(|x| 2.0 * x).collect();
        let scaled = autocorr(&doubled, &lags).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // A general affine map matches to rounding error.
        let mapped: Vec<f64> = series.iter().map(|x| -1.7 * x + 0.3).collect();
        let general = autocorr(&mapped, &lags).unwrap();
        for (a, b) in base.iter().zip(&general) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ess_of_iid_noise_is_nearly_the_length() {
        let series = iid_normal(10_000, 29);
        let (ess, kappa) = effective_sample_size(&series).unwrap();
        assert!(ess >= 0.8 * 10_000.0 && ess <= 10_000.0, "ess {ess}");
        assert!(kappa >= 1.0);
    }

    #[test]
    fn ess_matches_the_ar1_closed_form() {
        // κ = (1 + φ)/(1 − φ) = 3 at φ = 0.5.
        let series = ar1(0.5, 100_000, 31);
        let (ess, kappa) = effective_sample_size(&series).unwrap();
        assert!((kappa - 3.0).abs() < 0.3, "kappa {kappa}");
        assert!((ess * kappa - 100_000.0).abs() < 1e-6 * 100_000.0);
    }

    #[test]
    fn ess_respects_bounds_across_inputs() {
        for seed in 0..5 {
            for &phi in &[0.0, 0.3, 0.9, -0.5] {
                let series = ar1(phi, 5_000, 100 + seed);
                let (ess, kappa) = effective_sample_size(&series).unwrap();
                assert!(ess > 0.0 && ess <= 5_000.0, "ess {ess} at phi {phi}");
                assert!(kappa >= 1.0, "kappa {kappa} at phi {phi}");
            }
        }
        assert!(effective_sample_size(&[1.0; 5]).is_err());
        assert!(matches!(
            effective_sample_size(&[2.0; 100]),
            Err(Error::DegenerateSeries(_))
        ));
    }

    #[test]
    fn subsample_lag_oracles() {
        let iid = iid_normal(10_000, 37);
        assert_eq!(
            subsample_lag(&iid, 0.1).unwrap(),
            SubsampleLag { lag: 1, capped: false }
        );
        // 0.5³ = 0.125 > 0.1 > 0.5⁴ = 0.0625, so G should be near 4.
        let series = ar1(0.5, 100_000, 41);
        let s = subsample_lag(&series, 0.1).unwrap();
        assert!(!s.capped);
        assert!((3..=5).contains(&s.lag), "lag {}", s.lag);
        // A slow deterministic ramp never decorrelates: capped at T/10.
        let ramp: Vec<f64> = (0..500).map(|t| t as f64 / 500.0).collect();
        let s = subsample_lag(&ramp, 0.1).unwrap();
        assert_eq!(s.lag, 50);
        assert!(s.capped);
        assert!(subsample_lag(&iid, 0.0).is_err());
    }

    #[test]
    fn mcse_oracles() {
        let iid = iid_normal(10_000, 43);
        let mcse = mc_standard_error(&iid).unwrap();
        assert!((mcse - 0.01).abs() < 0.002, "iid mcse {mcse}");

        // AR(1) at φ = 0.5 inflates the error by √κ = √3.
        let series = ar1(0.5, 10_000, 47);
        let mcse_ar = mc_standard_error(&series).unwrap();
        let expected = 3.0_f64.sqrt() * 0.01;
        assert!(
            (mcse_ar - expected).abs() < 0.2 * expected,
            "ar1 mcse {mcse_ar} vs {expected}"
        );

        // Doubling the length shrinks the error by √2.
        let long = iid_normal(20_000, 43);
        let mcse_long = mc_standard_error(&long).unwrap();
        let ratio = mcse / mcse_long;
        assert!(
            (ratio - std::f64::consts::SQRT_2).abs() < 0.15,
            "scaling ratio {ratio}"
        );
    }

    #[test]
    fn report_covers_every_coordinate_and_is_deterministic() {
        let mut trace = Trace::new("demo", 9, vec!["a".to_string(), "b".to_string()]);
        let a = ar1(0.5, 2_000, 53);
        let b = iid_normal(2_000, 59);
        for t in 0..2_000 {
            trace.push(&[a[t], b[t]], LogDensity::new(-1.0), &[true]);
        }
        let report = compute_report(&trace, 200, &DEFAULT_LAGS).unwrap();
        assert_eq!(report.format_version, REPORT_FORMAT_VERSION);
        assert_eq!(report.coordinates.len(), 2);
        assert_eq!(report.burn_in_used, 200);
        assert_eq!(report.chain_length, 2_000);
        assert_eq!(report.acceptance_rate, 1.0);
        let ess_a = report.coordinates[0].ess.unwrap();
        let ess_b = report.coordinates[1].ess.unwrap();
        assert!(ess_a < ess_b, "correlated coordinate must have lower ess");
        assert_eq!(report.min_ess, Some(ess_a.min(ess_b)));
        assert!(report.coordinates[0].acf[0].value == 1.0);

        let again = compute_report(&trace, 200, &DEFAULT_LAGS).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn degenerate_and_short_chains_get_null_fields_not_errors() {
        let constant = constant_trace(1.0, 50);
        let report = compute_report(&constant, 0, &DEFAULT_LAGS).unwrap();
        let coord = &report.coordinates[0];
        assert_eq!(coord.mean, 1.0);
        assert!(coord.variance.is_none());
        assert!(coord.ess.is_none());
        assert!(coord.mcse.is_none());
        assert!(!report.warnings.is_empty());

        let single = constant_trace(4.0, 1);
        let report = compute_report(&single, 0, &DEFAULT_LAGS).unwrap();
        assert_eq!(report.chain_length, 1);
        assert!(report.coordinates[0].ess.is_none());

        let short = series_trace(&iid_normal(5, 61));
        let report = compute_report(&short, 0, &DEFAULT_LAGS).unwrap();
        assert!(report.coordinates[0].variance.is_some());
        assert!(report.coordinates[0].ess.is_none());
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn report_round_trips_through_json() {
        let trace = series_trace(&ar1(0.3, 500, 67));
        let report = compute_report(&trace, 50, &[0, 1, 2]).unwrap();
        let text = serde_json::to_string_pretty(&report).unwrap();
        let back: DiagnosticsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        assert!(text.find("format_version").unwrap() < text.find("kernel_label").unwrap());
    }

    #[test]
    fn default_burn_in_is_ten_percent() {
        assert_eq!(default_burn_in(10_000), 1_000);
        assert_eq!(default_burn_in(9), 0);
    }
}
