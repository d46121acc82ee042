//! Configuration-driven experiment execution: builds the target and
//! kernel a config asks for, runs an optional adaptive warm-up and then
//! the sampling phase, and writes the trace, report, and warm-up files.
//!
//! Determinism contract: the warm-up consumes stream 2r+1 of the seed
//! and the sampling phase stream 2r (replicate r; a plain run is
//! replicate 0), so adding or removing warm-up never disturbs the
//! sampling-phase draws, and the post-freeze trajectory matches a
//! never-adapted run configured with the frozen scales.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::adapt::{ScaleAdaptor, WarmupSummary};
use crate::config::{AdaptSpec, ExperimentConfig, KernelSpec, TargetSpec};
use crate::diagnostics::{compute_report, DiagnosticsReport, DEFAULT_LAGS};
use crate::error::{invalid_argument, Error, Result};
use crate::hamiltonian::{hmc_step, mala_step, HmcSettings};
use crate::kernel::{
    mh_step, rwm_step, within_gibbs_step, ChainState, ProposalKernel, RandomWalk,
};
use crate::logdomain::LogDensity;
use crate::mixture::MixtureData;
use crate::particle::{bootstrap_filter, load_series, HmmModel, LgssParams};
use crate::stream::RngStream;
use crate::target::{discrete_target, gaussian_target, toy_sin_target, TargetModel};
use crate::trace::Trace;

/// Instantiates the distribution a config names. The state-space target
/// has no closed-form density to walk over, so it has no TargetModel;
/// its kernel carries the model instead.
pub fn build_target(spec: &TargetSpec) -> Result<Option<TargetModel>> {
    match spec {
        TargetSpec::ToySin => Ok(Some(toy_sin_target())),
        TargetSpec::Gaussian { dim } => Ok(Some(gaussian_target(*dim))),
        TargetSpec::Mixture { data } => {
            let data = MixtureData::load(data)?;
            Ok(Some(crate::mixture::mixture_target(data)))
        }
        TargetSpec::Discrete { weights } => Ok(Some(discrete_target(weights)?)),
        TargetSpec::LgssHmm { .. } => Ok(None),
    }
}

/// The state-space family with θ = (emission noise variance) and every
/// other parameter pinned. Non-positive variances emit zero density, so
/// stray proposals collapse the filter instead of crashing it.
pub fn lgss_emission_var_family(params: LgssParams) -> Result<HmmModel> {
    params.validate()?;
    let base = params;
    Ok(HmmModel::new(
        vec![params.emission_noise_var],
        move |_, rng| base.init_mean + base.init_var.sqrt() * rng.standard_normal(),
        move |_, x| {
            crate::dist::log_pdf_normal(x, base.init_mean, base.init_var.sqrt())
                .expect("validated init variance")
        },
        move |_, from, rng| base.phi * from + base.state_noise_var.sqrt() * rng.standard_normal(),
        move |_, from, to| {
            crate::dist::log_pdf_normal(to, base.phi * from, base.state_noise_var.sqrt())
                .expect("validated state noise variance")
        },
        move |theta, x, y| {
            let var = theta[0];
            if var > 0.0 && var.is_finite() {
                crate::dist::log_pdf_normal(y, base.emission_coeff * x, var.sqrt())
                    .expect("positive variance")
            } else {
                f64::NEG_INFINITY
            }
        },
    ))
}

/// Scale-invariant prior on the inferred emission noise variance.
pub fn emission_var_prior(theta: &[f64]) -> LogDensity {
    if theta[0] > 0.0 && theta[0].is_finite() {
        LogDensity::new(-theta[0].ln())
    } else {
        LogDensity::ZERO_DENSITY
    }
}

/// Everything a configured kernel needs to take one step.
enum BuiltKernel {
    Rwm {
        target: TargetModel,
        walk: RandomWalk,
    },
    Neighbor {
        target: TargetModel,
        proposal: ProposalKernel,
    },
    Joint {
        target: TargetModel,
        proposal: ProposalKernel,
    },
    Gibbs {
        target: TargetModel,
        blocks: Vec<ProposalKernel>,
    },
    Mala {
        target: TargetModel,
        step: f64,
    },
    Hmc {
        target: TargetModel,
        settings: HmcSettings,
    },
    PseudoMarginal {
        target: TargetModel,
        walk: RandomWalk,
        noise_sd: f64,
    },
    Pmcmc {
        family: HmmModel,
        observations: Vec<f64>,
        particles: usize,
        proposal: ProposalKernel,
    },
}

impl BuiltKernel {
    fn build(config: &ExperimentConfig) -> Result<Self> {
        let target = build_target(&config.target)?;
        match (&config.kernel, target) {
            (KernelSpec::Rwm { walk, scales }, Some(target)) => {
                if matches!(config.target, TargetSpec::Discrete { .. }) {
                    // A continuous walk cannot stay on the integer grid;
                    // discrete targets move to a nearest neighbor instead.
                    Ok(BuiltKernel::Neighbor {
                        target,
                        proposal: ProposalKernel::nearest_neighbor(),
                    })
                } else {
                    Ok(BuiltKernel::Rwm {
                        walk: RandomWalk::new(*walk, scales.clone())?,
                        target,
                    })
                }
            }
            (KernelSpec::MhJointMixture { eps, delta }, Some(target)) => Ok(BuiltKernel::Joint {
                proposal: crate::kernel::mixture_joint_kernel(*eps, *delta)?,
                target,
            }),
            (KernelSpec::WithinGibbsMixture { eps, delta }, Some(target)) => {
                Ok(BuiltKernel::Gibbs {
                    blocks: crate::kernel::mixture_gibbs_blocks(*eps, *delta)?,
                    target,
                })
            }
            (KernelSpec::Mala { step }, Some(target)) => Ok(BuiltKernel::Mala {
                target,
                step: *step,
            }),
            (
                KernelSpec::Hmc {
                    step,
                    n_leapfrog,
                    mass,
                },
                Some(target),
            ) => {
                let mass = mass
                    .clone()
                    .unwrap_or_else(|| vec![1.0; target.dim()]);
                Ok(BuiltKernel::Hmc {
                    settings: HmcSettings::new(*step, *n_leapfrog, mass)?,
                    target,
                })
            }
            (
                KernelSpec::PseudoMarginal {
                    walk,
                    scales,
                    noise_sd,
                },
                Some(target),
            ) => {
                if !(*noise_sd >= 0.0) || !noise_sd.is_finite() {
                    return Err(crate::error::invalid_parameter(format!(
                        "estimator noise must be nonnegative and finite, got {noise_sd}"
                    )));
                }
                Ok(BuiltKernel::PseudoMarginal {
                    walk: RandomWalk::new(*walk, scales.clone())?,
                    target,
                    noise_sd: *noise_sd,
                })
            }
            (KernelSpec::Pmcmc { particles, scale }, None) => {
                let TargetSpec::LgssHmm { params, data } = &config.target else {
                    unreachable!("config validation pairs pmcmc with lgss-hmm");
                };
                if *particles == 0 {
                    return Err(crate::error::invalid_parameter(
                        "pmcmc needs at least one particle",
                    ));
                }
                Ok(BuiltKernel::Pmcmc {
                    family: lgss_emission_var_family(*params)?,
                    observations: load_series(data)?,
                    particles: *particles,
                    proposal: ProposalKernel::gaussian_walk(vec![*scale])?,
                })
            }
            _ => unreachable!("config validation rejects incompatible kernel/target pairs"),
        }
    }

    /// Proposal scales if this kernel has adaptable ones.
    fn scales(&self) -> Option<Vec<f64>> {
        match self {
            BuiltKernel::Rwm { walk, .. } | BuiltKernel::PseudoMarginal { walk, .. } => {
                Some(walk.scales().to_vec())
            }
            BuiltKernel::Mala { step, .. } => Some(vec![*step]),
            BuiltKernel::Hmc { settings, .. } => Some(vec![settings.step_size()]),
            _ => None,
        }
    }

    /// Rebuilds the kernel with new scales (same shape as `scales()`).
    fn with_scales(&self, scales: &[f64]) -> Result<Self> {
        match self {
            BuiltKernel::Rwm { target, walk } => Ok(BuiltKernel::Rwm {
                target: target.clone(),
                walk: RandomWalk::new(walk.kind(), scales.to_vec())?,
            }),
            BuiltKernel::PseudoMarginal {
                target,
                walk,
                noise_sd,
            } => Ok(BuiltKernel::PseudoMarginal {
                target: target.clone(),
                walk: RandomWalk::new(walk.kind(), scales.to_vec())?,
                noise_sd: *noise_sd,
            }),
            BuiltKernel::Mala { target, .. } => Ok(BuiltKernel::Mala {
                target: target.clone(),
                step: scales[0],
            }),
            BuiltKernel::Hmc { target, settings } => Ok(BuiltKernel::Hmc {
                target: target.clone(),
                settings: HmcSettings::new(
                    scales[0],
                    settings.n_leapfrog(),
                    settings.mass_diagonal().to_vec(),
                )?,
            }),
            _ => Err(invalid_argument("kernel does not support scale adaptation")),
        }
    }

    fn init_state(&self, start: &[f64], rng: &mut RngStream) -> Result<ChainState> {
        match self {
            BuiltKernel::Rwm { target, .. }
            | BuiltKernel::Neighbor { target, .. }
            | BuiltKernel::Joint { target, .. }
            | BuiltKernel::Gibbs { target, .. }
            | BuiltKernel::Mala { target, .. }
            | BuiltKernel::Hmc { target, .. } => Ok(ChainState::init(start.to_vec(), target)),
            BuiltKernel::PseudoMarginal {
                target, noise_sd, ..
            } => {
                let estimator = noisy_estimator(target, *noise_sd);
                crate::kernel::init_pseudo_marginal_state(start.to_vec(), estimator, rng)
            }
            BuiltKernel::Pmcmc {
                family,
                observations,
                particles,
                ..
            } => crate::particle::init_pmcmc_state(
                start.to_vec(),
                family,
                &emission_var_prior,
                observations,
                *particles,
                rng,
            ),
        }
    }

    /// One transition. Returns the new state plus one accept flag per
    /// decision taken (several for a block sweep).
    fn step(&self, state: &ChainState, rng: &mut RngStream) -> Result<(ChainState, Vec<bool>)> {
        match self {
            BuiltKernel::Rwm { target, walk } => {
                let (next, accept) = rwm_step(state, target, walk, rng)?;
                Ok((next, vec![accept]))
            }
            BuiltKernel::Neighbor { target, proposal }
            | BuiltKernel::Joint { target, proposal } => {
                let (next, accept) = mh_step(state, target, proposal, rng)?;
                Ok((next, vec![accept]))
            }
            BuiltKernel::Gibbs { target, blocks } => within_gibbs_step(state, target, blocks, rng),
            BuiltKernel::Mala { target, step } => {
                let (next, accept) = mala_step(state, target, *step, rng)?;
                Ok((next, vec![accept]))
            }
            BuiltKernel::Hmc { target, settings } => {
                let (next, accept) = hmc_step(state, target, settings, rng)?;
                Ok((next, vec![accept]))
            }
            BuiltKernel::PseudoMarginal {
                target,
                walk,
                noise_sd,
            } => {
                let estimator = noisy_estimator(target, *noise_sd);
                let (next, accept) =
                    crate::kernel::pseudo_marginal_step(state, estimator, walk.kernel(), rng)?;
                Ok((next, vec![accept]))
            }
            BuiltKernel::Pmcmc {
                family,
                observations,
                particles,
                proposal,
            } => {
                let (next, accept) = crate::particle::pmcmc_step(
                    state,
                    family,
                    &emission_var_prior,
                    proposal,
                    observations,
                    *particles,
                    rng,
                )?;
                Ok((next, vec![accept]))
            }
        }
    }

    fn kernel_label(&self) -> &'static str {
        match self {
            BuiltKernel::Rwm { .. } => "rwm",
            BuiltKernel::Neighbor { .. } => "rwm-nearest-neighbor",
            BuiltKernel::Joint { .. } => "mh-joint-mixture",
            BuiltKernel::Gibbs { .. } => "within-gibbs-mixture",
            BuiltKernel::Mala { .. } => "mala",
            BuiltKernel::Hmc { .. } => "hmc",
            BuiltKernel::PseudoMarginal { .. } => "pseudo-marginal",
            BuiltKernel::Pmcmc { .. } => "pmcmc",
        }
    }
}

/// Unbiased noisy density estimate: log π̂ = log π̃ + σz − σ²/2, so
/// E[exp] is exp(log π̃) exactly.
fn noisy_estimator<'a>(
    target: &'a TargetModel,
    noise_sd: f64,
) -> impl Fn(&[f64], &mut RngStream) -> Result<f64> + 'a {
    move |x: &[f64], rng: &mut RngStream| {
        let base = target.log_density(x);
        if noise_sd == 0.0 {
            return Ok(base.value());
        }
        let noise = noise_sd * rng.standard_normal() - 0.5 * noise_sd * noise_sd;
        Ok(base.value() + noise)
    }
}

/// Paths written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
    pub warmup_path: Option<PathBuf>,
    pub latent_path: Option<PathBuf>,
    pub report: DiagnosticsReport,
}

fn ensure_parent_dir(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    prefix.with_file_name(name)
}

/// Runs one configured chain: optional warm-up with adaptation, then the
/// sampling phase, writing `<prefix>.trace.csv`, `<prefix>.report.json`,
/// and `<prefix>.warmup.csv` when warm-up ran.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutputs> {
    run_replicate(config, 0)
}

/// Like `run_experiment` for replicate index r: RNG streams 2r (sampling)
/// and 2r+1 (warm-up), with `.rep<r>` in the file names for r > 0.
pub fn run_replicate(config: &ExperimentConfig, replicate: u64) -> Result<RunOutputs> {
    let mut kernel = BuiltKernel::build(config)?;
    let prefix = if replicate == 0 {
        config.output_prefix.clone()
    } else {
        suffixed(&config.output_prefix, &format!(".rep{replicate}"))
    };
    ensure_parent_dir(&prefix)?;

    let coord_names = config.target.coord_names();
    let mut start = config.start.clone();

    // Warm-up: adapt scales on the dedicated stream, write the warm-up
    // trace, freeze, and continue sampling from where warm-up ended.
    let mut warmup_summary = None;
    let mut warmup_path = None;
    if let Some(adapt) = &config.adapt {
        let mut warmup_rng = RngStream::with_stream(config.seed, 2 * replicate + 1);
        let (summary, final_position, warmup_trace) =
            run_warmup(config, &mut kernel, adapt, &coord_names, &mut warmup_rng)?;
        let path = suffixed(&prefix, ".warmup.csv");
        warmup_trace.save(&path)?;
        warmup_path = Some(path);
        warmup_summary = Some(summary);
        start = final_position;
    }

    let mut rng = RngStream::with_stream(config.seed, 2 * replicate);
    let mut state = kernel.init_state(&start, &mut rng)?;
    let mut trace = Trace::new(kernel.kernel_label(), config.seed, coord_names);
    for _ in 0..config.chain_length {
        let (next, flags) = kernel.step(&state, &mut rng)?;
        state = next;
        trace.push(&state.position, state.log_target, &flags);
    }

    let trace_path = suffixed(&prefix, ".trace.csv");
    trace.save(&trace_path)?;

    let mut report = compute_report(&trace, config.burn_in, &DEFAULT_LAGS)?;
    report.warmup = warmup_summary;
    let report_path = suffixed(&prefix, ".report.json");
    write_report(&report, &report_path)?;

    // For particle kernels, draw one latent trajectory at the final
    // parameter value so the hidden series can be inspected.
    let mut latent_path = None;
    if let BuiltKernel::Pmcmc {
        family,
        observations,
        particles,
        ..
    } = &kernel
    {
        let model = family.with_theta(state.position.clone());
        let mut latent_rng = RngStream::with_stream(config.seed, 2 * replicate + 1_000_000);
        if let Ok(outcome) = bootstrap_filter(&model, observations, *particles, &mut latent_rng) {
            let path = suffixed(&prefix, ".latent.csv");
            crate::particle::save_series(&outcome.trajectory, &path)?;
            latent_path = Some(path);
        }
    }

    Ok(RunOutputs {
        trace_path,
        report_path,
        warmup_path,
        latent_path,
        report,
    })
}

fn run_warmup(
    config: &ExperimentConfig,
    kernel: &mut BuiltKernel,
    adapt: &AdaptSpec,
    coord_names: &[String],
    rng: &mut RngStream,
) -> Result<(WarmupSummary, Vec<f64>, Trace)> {
    let initial_scales = kernel
        .scales()
        .ok_or_else(|| invalid_argument("kernel does not support scale adaptation"))?;
    let mut adaptor = ScaleAdaptor::new(&initial_scales, adapt.target_rate, adapt.window_size)?;
    let mut state = kernel.init_state(&config.start, rng)?;
    let mut trace = Trace::new("warmup", config.seed, coord_names.to_vec());
    let mut window_rates = Vec::with_capacity(adapt.windows);

    for _ in 0..adapt.windows {
        let working = kernel.with_scales(&adaptor.scales())?;
        let mut accepted = 0usize;
        for _ in 0..adapt.window_size {
            let (next, flags) = working.step(&state, rng)?;
            state = next;
            accepted += flags.iter().filter(|&&f| f).count();
            trace.push(&state.position, state.log_target, &flags);
        }
        // One global accept decision per step, so every scale component
        // sees the same window rate.
        let rate = accepted as f64 / adapt.window_size as f64;
        adaptor.adapt_scale(&vec![rate; initial_scales.len()])?;
        window_rates.push(vec![rate]);
    }
    adaptor.freeze();
    let final_scales = adaptor.scales();
    let frozen = kernel.with_scales(&final_scales)?;
    *kernel = frozen;

    let summary = WarmupSummary {
        windows: adapt.windows,
        window_size: adapt.window_size,
        target_rate: adapt.target_rate,
        initial_scales,
        final_scales,
        window_rates,
    };
    Ok((summary, state.position.clone(), trace))
}

/// Serializes a report with a trailing newline so files are POSIX text.
pub fn write_report(report: &DiagnosticsReport, path: &Path) -> Result<()> {
    ensure_parent_dir(path)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, report)
        .map_err(|e| invalid_argument(format!("report serialization failed: {e}")))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Runs `count` independent replicates concurrently, each on its own
/// RNG streams and writing its own files.
pub fn run_replicates(config: &ExperimentConfig, count: u64) -> Result<Vec<RunOutputs>> {
    if count == 0 {
        return Err(invalid_argument("need at least one replicate"));
    }
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for r in 0..count {
            handles.push(scope.spawn(move || run_replicate(config, r)));
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("replicate thread panicked"))
            .collect()
    })
}

/// Diagnostics for an existing trace file.
pub fn diagnose(
    trace_path: &Path,
    lags: Option<&[usize]>,
    burn_in: Option<usize>,
) -> Result<DiagnosticsReport> {
    let trace = Trace::load(trace_path)?;
    let burn_in = match burn_in {
        Some(b) => {
            if b >= trace.len() {
                return Err(invalid_argument(format!(
                    "burn-in {b} leaves no samples from a {}-row trace",
                    trace.len()
                )));
            }
            b
        }
        None => crate::diagnostics::default_burn_in(trace.len()),
    };
    match lags {
        Some(lags) => compute_report(&trace, burn_in, lags),
        None => compute_report(&trace, burn_in, &DEFAULT_LAGS),
    }
}

/// A binned density estimate with an optional per-bin reference.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramTable {
    pub lo: f64,
    pub hi: f64,
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub samples_in_range: usize,
}

impl HistogramTable {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.centers.len() as f64
    }

    /// Total variation distance between the empirical and reference
    /// binned densities (both normalized over the range).
    pub fn total_variation(&self) -> Option<f64> {
        let reference = self.reference.as_ref()?;
        let width = self.bin_width();
        Some(
            0.5 * self
                .densities
                .iter()
                .zip(reference)
                .map(|(e, r)| (e - r).abs() * width)
                .sum::<f64>(),
        )
    }
}

/// Bins samples into a density table over [lo, hi]. The reference
/// column, when a 1-d target is supplied, is that target's density
/// averaged per bin and normalized over the same range by quadrature,
/// so the two columns are directly comparable.
pub fn histogram_table(
    values: &[f64],
    bins: usize,
    lo: f64,
    hi: f64,
    reference: Option<&TargetModel>,
) -> Result<HistogramTable> {
    if bins < 2 {
        return Err(invalid_argument(format!("need at least 2 bins, got {bins}")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid_argument(format!("bad range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut in_range = 0usize;
    for &v in values {
        if v >= lo && v <= hi {
            let mut bin = ((v - lo) / width) as usize;
            if bin == bins {
                bin -= 1;
            }
            counts[bin] += 1;
            in_range += 1;
        }
    }
    if in_range == 0 {
        return Err(Error::EmptyHistogram);
    }
    let centers: Vec<f64> = (0..bins).map(|b| lo + (b as f64 + 0.5) * width).collect();
    let densities: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (in_range as f64 * width))
        .collect();

    let reference = match reference {
        None => None,
        Some(target) => {
            if target.dim() != 1 {
                return Err(invalid_argument(
                    "histogram reference needs a one-dimensional target",
                ));
            }
            // Average density over each bin by Simpson quadrature, then
            // normalize the bin masses over the whole range.
            let mut masses = Vec::with_capacity(bins);
            for b in 0..bins {
                let a = lo + b as f64 * width;
                masses.push(bin_mass(target, a, a + width)?);
            }
            let total: f64 = masses.iter().sum();
            if total <= 0.0 {
                return Err(invalid_argument(
                    "reference target has no mass on the histogram range",
                ));
            }
            Some(masses.iter().map(|m| m / (total * width)).collect())
        }
    };

    Ok(HistogramTable {
        lo,
        hi,
        centers,
        densities,
        reference,
        samples_in_range: in_range,
    })
}

fn bin_mass(target: &TargetModel, a: f64, b: f64) -> Result<f64> {
    // Simpson with 100 intervals per bin; fine enough for plot-ready
    // references next to Monte Carlo error.
    let n = 100;
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let x = a + i as f64 * h;
        let f = target.log_density(&[x]).exp();
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * f;
    }
    Ok(acc * h / 3.0)
}

/// Histogram CSV: `bin_center,density[,reference_density]`.
pub fn write_histogram_csv<W: std::io::Write>(table: &HistogramTable, out: &mut W) -> Result<()> {
    match &table.reference {
        Some(_) => writeln!(out, "bin_center,density,reference_density")?,
        None => writeln!(out, "bin_center,density")?,
    }
    for (i, (center, density)) in table.centers.iter().zip(&table.densities).enumerate() {
        match &table.reference {
            Some(reference) => {
                writeln!(out, "{center:.16e},{density:.16e},{:.16e}", reference[i])?
            }
            None => writeln!(out, "{center:.16e},{density:.16e}")?,
        }
    }
    Ok(())
}

/// One trace's summary in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub label: String,
    pub mean: f64,
    pub mcse: Option<f64>,
    pub ess: Option<f64>,
    pub acceptance_rate: f64,
}

/// Side-by-side summaries plus pairwise mean gaps in combined-MCSE units.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub column: String,
    pub rows: Vec<CompareRow>,
    /// (i, j, |meanᵢ − meanⱼ| / √(mcseᵢ² + mcseⱼ²)); None when either
    /// MCSE is unavailable.
    pub pairwise: Vec<(usize, usize, Option<f64>)>,
}

/// Compares the same column across several traces, each trimmed by its
/// own default burn-in.
pub fn compare_traces(traces: &[(String, Trace)], column: &str) -> Result<CompareTable> {
    if traces.len() < 2 {
        return Err(invalid_argument("compare needs at least two traces"));
    }
    let mut rows = Vec::with_capacity(traces.len());
    for (label, trace) in traces {
        let series_full = trace.coordinate_by_name(column)?;
        let burn_in = crate::diagnostics::default_burn_in(series_full.len());
        let series = &series_full[burn_in..];
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let (mcse, ess) = match crate::diagnostics::effective_sample_size(series) {
            Ok((ess, _)) => (
                Some(crate::diagnostics::mc_standard_error(series)?),
                Some(ess),
            ),
            Err(_) => (None, None),
        };
        rows.push(CompareRow {
            label: label.clone(),
            mean,
            mcse,
            ess,
            acceptance_rate: trace.acceptance_rate(),
        });
    }
    let mut pairwise = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let units = match (rows[i].mcse, rows[j].mcse) {
                (Some(a), Some(b)) => {
                    let combined = (a * a + b * b).sqrt();
                    Some((rows[i].mean - rows[j].mean).abs() / combined)
                }
                _ => None,
            };
            pairwise.push((i, j, units));
        }
    }
    Ok(CompareTable {
        column: column.to_string(),
        rows,
        pairwise,
    })
}

/// Plain-text rendering of a comparison.
pub fn render_compare(table: &CompareTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "column: {}", table.column);
    let _ = writeln!(
        out,
        "{:<28} {:>14} {:>14} {:>12} {:>8}",
        "trace", "mean", "mcse", "ess", "accept"
    );
    for row in &table.rows {
        let mcse = row
            .mcse
            .map_or("n/a".to_string(), |v| format!("{v:.6}"));
        let ess = row.ess.map_or("n/a".to_string(), |v| format!("{v:.1}"));
        let _ = writeln!(
            out,
            "{:<28} {:>14.8} {:>14} {:>12} {:>8.4}",
            row.label, row.mean, mcse, ess, row.acceptance_rate
        );
    }
    let _ = writeln!(out, "pairwise |Δmean| in combined-MCSE units:");
    for (i, j, units) in &table.pairwise {
        let value = units.map_or("n/a".to_string(), |u| format!("{u:.3}"));
        let _ = writeln!(
            out,
            "  {} vs {}: {}",
            table.rows[*i].label, table.rows[*j].label, value
        );
    }
    out
}
