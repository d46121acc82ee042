//! Experiment configuration: a flat key = value text format with dotted
//! key names, parsed into a validated plan for one chain run.
//!
//! Example:
//!
//! ```text
//! target = toy-sin
//! kernel = rwm
//! kernel.scale = 1.0
//! chain_length = 10000
//! seed = 1
//! output_prefix = out/toy
//! ```
//!
//! Every parse or validation problem reports the offending line. The
//! `MH_SEED` environment variable overrides the configured seed so a
//! batch driver can fan out replicates without editing files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kernel::WalkKind;
use crate::particle::LgssParams;

fn config_error(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// The raw key/value layer. Keys are consumed as they are interpreted;
/// anything left over at the end is an unknown key and an error.
#[derive(Debug, Clone)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (index, raw_line) in text.lines().enumerate() {
            let line = index + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(config_error(line, format!("expected key = value, got {trimmed:?}")));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(config_error(line, "empty key"));
            }
            if entries.contains_key(&key) {
                return Err(config_error(line, format!("duplicate key {key:?}")));
            }
            entries.insert(key, Entry { value, line });
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn take_required(&mut self, key: &str) -> Result<Entry> {
        self.take(key)
            .ok_or_else(|| config_error(0, format!("missing required key {key:?}")))
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(entry) => entry
                .value
                .parse::<f64>()
                .map(Some)
                .map_err(|_| config_error(entry.line, format!("{key} must be a number, got {:?}", entry.value))),
        }
    }

    fn take_required_f64(&mut self, key: &str) -> Result<f64> {
        let entry = self.take_required(key)?;
        entry
            .value
            .parse::<f64>()
            .map_err(|_| config_error(entry.line, format!("{key} must be a number, got {:?}", entry.value)))
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<(usize, usize)>> {
        match self.take(key) {
            None => Ok(None),
            Some(entry) => entry
                .value
                .parse::<usize>()
                .map(|v| Some((v, entry.line)))
                .map_err(|_| {
                    config_error(
                        entry.line,
                        format!("{key} must be a nonnegative integer, got {:?}", entry.value),
                    )
                }),
        }
    }

    fn take_vec_f64(&mut self, key: &str) -> Result<Option<(Vec<f64>, usize)>> {
        match self.take(key) {
            None => Ok(None),
            Some(entry) => {
                let mut values = Vec::new();
                for part in entry.value.split_whitespace() {
                    values.push(part.parse::<f64>().map_err(|_| {
                        config_error(
                            entry.line,
                            format!("{key} must be space-separated numbers, got {part:?}"),
                        )
                    })?);
                }
                if values.is_empty() {
                    return Err(config_error(entry.line, format!("{key} is empty")));
                }
                Ok(Some((values, entry.line)))
            }
        }
    }

    fn ensure_empty(self) -> Result<()> {
        if let Some((key, entry)) = self.entries.into_iter().next() {
            return Err(config_error(entry.line, format!("unknown key {key:?}")));
        }
        Ok(())
    }
}

/// Which distribution the chain samples from.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    ToySin,
    Gaussian { dim: usize },
    Mixture { data: PathBuf },
    LgssHmm { params: LgssParams, data: PathBuf },
    Discrete { weights: Vec<f64> },
}

impl TargetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TargetSpec::ToySin => "toy-sin",
            TargetSpec::Gaussian { .. } => "gaussian",
            TargetSpec::Mixture { .. } => "mixture",
            TargetSpec::LgssHmm { .. } => "lgss-hmm",
            TargetSpec::Discrete { .. } => "discrete",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::ToySin | TargetSpec::Discrete { .. } => 1,
            TargetSpec::Gaussian { dim } => *dim,
            TargetSpec::Mixture { .. } => 2,
            // The state-space target infers the emission noise variance.
            TargetSpec::LgssHmm { .. } => 1,
        }
    }

    pub fn coord_names(&self) -> Vec<String> {
        match self {
            TargetSpec::ToySin | TargetSpec::Discrete { .. } => vec!["x".to_string()],
            TargetSpec::Gaussian { dim } => (1..=*dim).map(|i| format!("x{i}")).collect(),
            TargetSpec::Mixture { .. } => vec!["lambda".to_string(), "alpha".to_string()],
            TargetSpec::LgssHmm { .. } => vec!["emission_var".to_string()],
        }
    }

    pub fn default_start(&self) -> Vec<f64> {
        match self {
            TargetSpec::ToySin => vec![3.14],
            TargetSpec::Gaussian { dim } => vec![0.0; *dim],
            TargetSpec::Mixture { .. } => vec![1.0, 0.5],
            TargetSpec::LgssHmm { params, .. } => vec![params.emission_noise_var],
            TargetSpec::Discrete { weights } => vec![(weights.len() / 2) as f64],
        }
    }
}

/// Which transition kernel drives the chain.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Rwm {
        walk: WalkKind,
        scales: Vec<f64>,
    },
    MhJointMixture {
        eps: f64,
        delta: f64,
    },
    WithinGibbsMixture {
        eps: f64,
        delta: f64,
    },
    Mala {
        step: f64,
    },
    Hmc {
        step: f64,
        n_leapfrog: usize,
        mass: Option<Vec<f64>>,
    },
    /// Random walk over the target driven by a synthetic unbiased noisy
    /// estimate of the density: log π̂ = log π̃ + σz − σ²/2.
    PseudoMarginal {
        walk: WalkKind,
        scales: Vec<f64>,
        noise_sd: f64,
    },
    Pmcmc {
        particles: usize,
        scale: f64,
    },
}

impl KernelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Rwm { .. } => "rwm",
            KernelSpec::MhJointMixture { .. } => "mh-joint-mixture",
            KernelSpec::WithinGibbsMixture { .. } => "within-gibbs-mixture",
            KernelSpec::Mala { .. } => "mala",
            KernelSpec::Hmc { .. } => "hmc",
            KernelSpec::PseudoMarginal { .. } => "pseudo-marginal",
            KernelSpec::Pmcmc { .. } => "pmcmc",
        }
    }

    pub fn requires_gradient(&self) -> bool {
        matches!(self, KernelSpec::Mala { .. } | KernelSpec::Hmc { .. })
    }

    pub fn supports_adaptation(&self) -> bool {
        matches!(
            self,
            KernelSpec::Rwm { .. }
                | KernelSpec::Mala { .. }
                | KernelSpec::Hmc { .. }
                | KernelSpec::PseudoMarginal { .. }
        )
    }
}

/// Warm-up plan: `windows` scale updates of `window_size` steps each.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptSpec {
    pub windows: usize,
    pub window_size: usize,
    pub target_rate: f64,
}

/// A fully validated run plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub kernel: KernelSpec,
    pub chain_length: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub start: Vec<f64>,
    pub output_prefix: PathBuf,
    pub adapt: Option<AdaptSpec>,
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut raw = RawConfig::parse(text)?;

        let target = parse_target(&mut raw)?;
        let kernel = parse_kernel(&mut raw, &target)?;

        let chain_entry = raw.take_required("chain_length")?;
        let chain_length: usize = chain_entry.value.parse().map_err(|_| {
            config_error(
                chain_entry.line,
                format!("chain_length must be a positive integer, got {:?}", chain_entry.value),
            )
        })?;
        if chain_length == 0 {
            return Err(config_error(chain_entry.line, "chain_length must be at least 1"));
        }

        let burn_in = match raw.take_usize("burn_in")? {
            Some((value, line)) => {
                if value >= chain_length {
                    return Err(config_error(
                        line,
                        format!("burn_in {value} must be below chain_length {chain_length}"),
                    ));
                }
                value
            }
            None => crate::diagnostics::default_burn_in(chain_length),
        };

        let seed_entry = raw.take_required("seed")?;
        let seed: u64 = seed_entry.value.parse().map_err(|_| {
            config_error(
                seed_entry.line,
                format!("seed must be a nonnegative integer, got {:?}", seed_entry.value),
            )
        })?;

        let start = match raw.take_vec_f64("start")? {
            Some((values, line)) => {
                if values.len() != target.dim() {
                    return Err(config_error(
                        line,
                        format!(
                            "start has {} coordinates but target {} is {}-dimensional",
                            values.len(),
                            target.name(),
                            target.dim()
                        ),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(config_error(line, "start must be finite"));
                }
                values
            }
            None => target.default_start(),
        };

        let output_entry = raw.take_required("output_prefix")?;
        if output_entry.value.is_empty() {
            return Err(config_error(output_entry.line, "output_prefix is empty"));
        }
        let output_prefix = PathBuf::from(output_entry.value);

        let adapt = parse_adapt(&mut raw, &kernel)?;

        raw.ensure_empty()?;

        Ok(ExperimentConfig {
            target,
            kernel,
            chain_length,
            burn_in,
            seed,
            start,
            output_prefix,
            adapt,
        })
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    /// Applies the `MH_SEED` override if the variable is set.
    pub fn apply_env_seed(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var("MH_SEED") {
            self.seed = raw.parse().map_err(|_| {
                config_error(0, format!("MH_SEED must be a nonnegative integer, got {raw:?}"))
            })?;
        }
        Ok(())
    }
}

fn existing_data_file(raw: &mut RawConfig, target_name: &str) -> Result<PathBuf> {
    let entry = raw.take_required("target.data")?;
    let path = PathBuf::from(&entry.value);
    if !path.is_file() {
        return Err(config_error(
            entry.line,
            format!("{target_name} data file {:?} does not exist", entry.value),
        ));
    }
    Ok(path)
}

fn parse_target(raw: &mut RawConfig) -> Result<TargetSpec> {
    let entry = raw.take_required("target")?;
    match entry.value.as_str() {
        "toy-sin" => Ok(TargetSpec::ToySin),
        "gaussian" => {
            let (dim, line) = raw
                .take_usize("target.dim")?
                .ok_or_else(|| config_error(0, "missing required key \"target.dim\""))?;
            if dim == 0 {
                return Err(config_error(line, "target.dim must be at least 1"));
            }
            Ok(TargetSpec::Gaussian { dim })
        }
        "mixture" => Ok(TargetSpec::Mixture {
            data: existing_data_file(raw, "mixture")?,
        }),
        "lgss-hmm" => {
            let data = existing_data_file(raw, "lgss-hmm")?;
            let params = LgssParams {
                phi: raw.take_required_f64("target.phi")?,
                state_noise_var: raw.take_required_f64("target.state_noise_var")?,
                emission_coeff: raw.take_required_f64("target.emission_coeff")?,
                emission_noise_var: raw.take_required_f64("target.emission_noise_var")?,
                init_mean: raw.take_required_f64("target.init_mean")?,
                init_var: raw.take_required_f64("target.init_var")?,
            };
            params
                .validate()
                .map_err(|e| config_error(entry.line, e.to_string()))?;
            Ok(TargetSpec::LgssHmm { params, data })
        }
        "discrete" => {
            let (weights, line) = raw
                .take_vec_f64("target.weights")?
                .ok_or_else(|| config_error(0, "missing required key \"target.weights\""))?;
            if weights.len() < 2 {
                return Err(config_error(line, "target.weights needs at least two entries"));
            }
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(config_error(line, "target.weights must be nonnegative"));
            }
            if weights.iter().sum::<f64>() <= 0.0 {
                return Err(config_error(line, "target.weights must have positive total mass"));
            }
            Ok(TargetSpec::Discrete { weights })
        }
        other => Err(config_error(
            entry.line,
            format!(
                "unknown target {other:?}; expected toy-sin, gaussian, mixture, lgss-hmm, or discrete"
            ),
        )),
    }
}

fn walk_scales(raw: &mut RawConfig, target: &TargetSpec) -> Result<Vec<f64>> {
    let (values, line) = raw
        .take_vec_f64("kernel.scale")?
        .ok_or_else(|| config_error(0, "missing required key \"kernel.scale\""))?;
    let dim = target.dim();
    let scales = if values.len() == 1 {
        vec![values[0]; dim]
    } else if values.len() == dim {
        values
    } else {
        return Err(config_error(
            line,
            format!("kernel.scale needs 1 or {dim} values, got {}", values.len()),
        ));
    };
    if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(config_error(line, "kernel.scale values must be positive"));
    }
    Ok(scales)
}

fn walk_kind(raw: &mut RawConfig) -> Result<WalkKind> {
    match raw.take("kernel.walk") {
        None => Ok(WalkKind::Uniform),
        Some(entry) => match entry.value.as_str() {
            "uniform" => Ok(WalkKind::Uniform),
            "gaussian" => Ok(WalkKind::Gaussian),
            other => Err(config_error(
                entry.line,
                format!("kernel.walk must be uniform or gaussian, got {other:?}"),
            )),
        },
    }
}

fn mixture_pair(raw: &mut RawConfig) -> Result<(f64, f64)> {
    let eps = raw.take_f64("kernel.eps")?.unwrap_or(0.1);
    let delta = raw.take_f64("kernel.delta")?.unwrap_or(0.1);
    Ok((eps, delta))
}

fn parse_kernel(raw: &mut RawConfig, target: &TargetSpec) -> Result<KernelSpec> {
    let entry = raw.take_required("kernel")?;
    let kernel = match entry.value.as_str() {
        "rwm" => KernelSpec::Rwm {
            walk: walk_kind(raw)?,
            scales: walk_scales(raw, target)?,
        },
        "mh-joint-mixture" => {
            let (eps, delta) = mixture_pair(raw)?;
            KernelSpec::MhJointMixture { eps, delta }
        }
        "within-gibbs-mixture" => {
            let (eps, delta) = mixture_pair(raw)?;
            KernelSpec::WithinGibbsMixture { eps, delta }
        }
        "mala" => KernelSpec::Mala {
            step: raw.take_required_f64("kernel.step")?,
        },
        "hmc" => {
            let step = raw.take_required_f64("kernel.step")?;
            let n_entry = raw.take_required("kernel.n_leapfrog")?;
            let n_leapfrog: usize = n_entry.value.parse().map_err(|_| {
                config_error(
                    n_entry.line,
                    format!("kernel.n_leapfrog must be a positive integer, got {:?}", n_entry.value),
                )
            })?;
            let mass = raw.take_vec_f64("kernel.mass")?.map(|(v, _)| v);
            KernelSpec::Hmc {
                step,
                n_leapfrog,
                mass,
            }
        }
        "pseudo-marginal" => KernelSpec::PseudoMarginal {
            walk: walk_kind(raw)?,
            scales: walk_scales(raw, target)?,
            noise_sd: raw.take_f64("kernel.noise_sd")?.unwrap_or(1.0),
        },
        "pmcmc" => {
            let n_entry = raw.take_required("kernel.particles")?;
            let particles: usize = n_entry.value.parse().map_err(|_| {
                config_error(
                    n_entry.line,
                    format!("kernel.particles must be a positive integer, got {:?}", n_entry.value),
                )
            })?;
            KernelSpec::Pmcmc {
                particles,
                scale: raw.take_required_f64("kernel.scale")?,
            }
        }
        other => {
            return Err(config_error(
                entry.line,
                format!(
                    "unknown kernel {other:?}; expected rwm, mh-joint-mixture, \
                     within-gibbs-mixture, mala, hmc, pseudo-marginal, or pmcmc"
                ),
            ))
        }
    };
    validate_compatibility(&kernel, target, entry.line)?;
    Ok(kernel)
}

fn validate_compatibility(kernel: &KernelSpec, target: &TargetSpec, line: usize) -> Result<()> {
    let ok = match kernel {
        KernelSpec::Rwm { .. } | KernelSpec::PseudoMarginal { .. } => {
            !matches!(target, TargetSpec::LgssHmm { .. })
        }
        KernelSpec::MhJointMixture { .. } | KernelSpec::WithinGibbsMixture { .. } => {
            matches!(target, TargetSpec::Mixture { .. })
        }
        // The isotropic Gaussian is the only shipped target with a gradient.
        KernelSpec::Mala { .. } | KernelSpec::Hmc { .. } => {
            matches!(target, TargetSpec::Gaussian { .. })
        }
        KernelSpec::Pmcmc { .. } => matches!(target, TargetSpec::LgssHmm { .. }),
    };
    if ok {
        Ok(())
    } else {
        let reason = if kernel.requires_gradient() {
            format!(
                "kernel {} needs a gradient and target {} has none",
                kernel.name(),
                target.name()
            )
        } else {
            format!(
                "kernel {} cannot sample target {}",
                kernel.name(),
                target.name()
            )
        };
        Err(config_error(line, reason))
    }
}

fn parse_adapt(raw: &mut RawConfig, kernel: &KernelSpec) -> Result<Option<AdaptSpec>> {
    let windows = raw.take_usize("adapt.windows")?;
    let window_size = raw.take_usize("adapt.window_size")?;
    let target_rate = raw.take_f64("adapt.target_rate")?;
    match windows {
        None => {
            if let Some((_, line)) = window_size {
                return Err(config_error(line, "adapt.window_size given without adapt.windows"));
            }
            if target_rate.is_some() {
                return Err(config_error(0, "adapt.target_rate given without adapt.windows"));
            }
            Ok(None)
        }
        Some((windows, line)) => {
            if windows == 0 {
                return Err(config_error(line, "adapt.windows must be at least 1"));
            }
            if !kernel.supports_adaptation() {
                return Err(config_error(
                    line,
                    format!("kernel {} does not support scale adaptation", kernel.name()),
                ));
            }
            let window_size = match window_size {
                Some((0, ws_line)) => {
                    return Err(config_error(ws_line, "adapt.window_size must be at least 1"))
                }
                Some((value, _)) => value,
                None => crate::adapt::DEFAULT_WINDOW,
            };
            let target_rate = target_rate.unwrap_or(crate::adapt::DEFAULT_TARGET_RATE);
            if !(target_rate > 0.0 && target_rate < 1.0) {
                return Err(config_error(
                    0,
                    format!("adapt.target_rate must lie in (0,1), got {target_rate}"),
                ));
            }
            Ok(Some(AdaptSpec {
                windows,
                window_size,
                target_rate,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "\
# toy run
target = toy-sin
kernel = rwm
kernel.scale = 1.0
chain_length = 10000
seed = 1
output_prefix = out/toy
";

    #[test]
    fn parses_the_toy_config_with_defaults() {
        let config = ExperimentConfig::from_text(TOY).unwrap();
        assert_eq!(config.target, TargetSpec::ToySin);
        assert_eq!(
            config.kernel,
            KernelSpec::Rwm {
                walk: WalkKind::Uniform,
                scales: vec![1.0],
            }
        );
        assert_eq!(config.chain_length, 10_000);
        assert_eq!(config.burn_in, 1_000, "default burn-in is 10%");
        assert_eq!(config.seed, 1);
        assert_eq!(config.start, vec![3.14], "toy chains start at 3.14");
        assert_eq!(config.output_prefix, PathBuf::from("out/toy"));
        assert!(config.adapt.is_none());
    }

    #[test]
    fn scale_broadcasts_over_gaussian_dimensions() {
        let text = "\
target = gaussian
target.dim = 3
kernel = rwm
kernel.walk = gaussian
kernel.scale = 0.5
chain_length = 100
seed = 2
output_prefix = out/g
";
        let config = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(
            config.kernel,
            KernelSpec::Rwm {
                walk: WalkKind::Gaussian,
                scales: vec![0.5, 0.5, 0.5],
            }
        );
        assert_eq!(config.start, vec![0.0, 0.0, 0.0]);
        assert_eq!(config.target.coord_names(), vec!["x1", "x2", "x3"]);

        let wrong = text.replace("kernel.scale = 0.5", "kernel.scale = 0.5 0.5");
        match ExperimentConfig::from_text(&wrong) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("1 or 3"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn mixture_config_requires_an_existing_data_file() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("counts.txt");
        std::fs::write(&data, "1\n0\n2\n").unwrap();
        let text = format!(
            "target = mixture\ntarget.data = {}\nkernel = within-gibbs-mixture\n\
             chain_length = 50\nseed = 3\noutput_prefix = out/mix\n",
            data.display()
        );
        let config = ExperimentConfig::from_text(&text).unwrap();
        assert_eq!(config.target.dim(), 2);
        assert_eq!(config.target.coord_names(), vec!["lambda", "alpha"]);
        assert_eq!(config.start, vec![1.0, 0.5]);
        assert_eq!(
            config.kernel,
            KernelSpec::WithinGibbsMixture { eps: 0.1, delta: 0.1 }
        );

        let missing = text.replace("counts.txt", "absent.txt");
        match ExperimentConfig::from_text(&missing) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("does not exist"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn lgss_config_builds_params_and_pmcmc() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("obs.txt");
        std::fs::write(&data, "0.5\n-0.25\n").unwrap();
        let text = format!(
            "target = lgss-hmm\ntarget.data = {}\ntarget.phi = 0.9\n\
             target.state_noise_var = 0.25\ntarget.emission_coeff = 1\n\
             target.emission_noise_var = 1\ntarget.init_mean = 0\ntarget.init_var = 1\n\
             kernel = pmcmc\nkernel.particles = 100\nkernel.scale = 0.4\n\
             chain_length = 20\nseed = 9\noutput_prefix = out/pm\n",
            data.display()
        );
        let config = ExperimentConfig::from_text(&text).unwrap();
        match &config.target {
            TargetSpec::LgssHmm { params, .. } => {
                assert_eq!(params.phi, 0.9);
                assert_eq!(params.emission_noise_var, 1.0);
            }
            other => panic!("wrong target {other:?}"),
        }
        assert_eq!(config.kernel, KernelSpec::Pmcmc { particles: 100, scale: 0.4 });
        assert_eq!(config.start, vec![1.0], "starts at the configured emission variance");

        let bad = text.replace("target.init_var = 1", "target.init_var = -1");
        assert!(matches!(
            ExperimentConfig::from_text(&bad),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn kernel_target_compatibility_is_enforced() {
        let incompatible = TOY.replace(
            "kernel = rwm\nkernel.scale = 1.0",
            "kernel = mala\nkernel.step = 0.5",
        );
        match ExperimentConfig::from_text(&incompatible) {
            Err(Error::Config { message, .. }) => {
                assert!(message.contains("gradient"), "message: {message}");
            }
            other => panic!("expected config error, got {other:?}"),
        }

        let gibbs_on_toy = TOY.replace(
            "kernel = rwm\nkernel.scale = 1.0",
            "kernel = within-gibbs-mixture",
        );
        assert!(matches!(
            ExperimentConfig::from_text(&gibbs_on_toy),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn hmc_config_round_trips_mass_and_leapfrog() {
        let text = "\
target = gaussian
target.dim = 2
kernel = hmc
kernel.step = 0.2
kernel.n_leapfrog = 15
kernel.mass = 1.0 2.0
chain_length = 100
seed = 4
output_prefix = out/h
";
        let config = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(
            config.kernel,
            KernelSpec::Hmc {
                step: 0.2,
                n_leapfrog: 15,
                mass: Some(vec![1.0, 2.0]),
            }
        );
    }

    #[test]
    fn line_numbers_point_at_the_offence() {
        let no_equals = "target = toy-sin\nkernel rwm\n";
        match ExperimentConfig::from_text(no_equals) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let duplicate = "target = toy-sin\ntarget = gaussian\n";
        match ExperimentConfig::from_text(duplicate) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let bad_number = TOY.replace("chain_length = 10000", "chain_length = ten");
        match ExperimentConfig::from_text(&bad_number) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("chain_length"));
            }
            other => panic!("{other:?}"),
        }
        let unknown = format!("{TOY}mystery = 1\n");
        match ExperimentConfig::from_text(&unknown) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 8);
                assert!(message.contains("mystery"));
            }
            other => panic!("{other:?}"),
        }
        let missing = "target = toy-sin\n";
        match ExperimentConfig::from_text(missing) {
            Err(err @ Error::Config { line: 0, .. }) => {
                assert!(err.to_string().contains("kernel"));
                assert_eq!(err.exit_code(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn run_length_rules() {
        let zero = TOY.replace("chain_length = 10000", "chain_length = 0");
        assert!(ExperimentConfig::from_text(&zero).is_err());
        let over = format!("{TOY}burn_in = 10000\n");
        assert!(ExperimentConfig::from_text(&over).is_err());
        let fine = format!("{TOY}burn_in = 9999\n");
        assert_eq!(ExperimentConfig::from_text(&fine).unwrap().burn_in, 9_999);
    }

    #[test]
    fn start_must_match_the_target_dimension() {
        let good = format!("{TOY}start = 2.5\n");
        assert_eq!(ExperimentConfig::from_text(&good).unwrap().start, vec![2.5]);
        let bad = format!("{TOY}start = 2.5 1.0\n");
        assert!(ExperimentConfig::from_text(&bad).is_err());
    }

    #[test]
    fn adaptation_block_rules() {
        let adapted = format!("{TOY}adapt.windows = 50\nadapt.target_rate = 0.3\n");
        let config = ExperimentConfig::from_text(&adapted).unwrap();
        assert_eq!(
            config.adapt,
            Some(AdaptSpec {
                windows: 50,
                window_size: 100,
                target_rate: 0.3,
            })
        );

        let orphan = format!("{TOY}adapt.window_size = 10\n");
        assert!(ExperimentConfig::from_text(&orphan).is_err());

        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("counts.txt");
        std::fs::write(&data, "1\n2\n").unwrap();
        let gibbs = format!(
            "target = mixture\ntarget.data = {}\nkernel = within-gibbs-mixture\n\
             chain_length = 50\nseed = 3\noutput_prefix = out/mix\nadapt.windows = 5\n",
            data.display()
        );
        match ExperimentConfig::from_text(&gibbs) {
            Err(Error::Config { message, .. }) => {
                assert!(message.contains("does not support scale adaptation"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn discrete_target_rules() {
        let text = "\
target = discrete
target.weights = 0.1 0.2 0.3 0.4
kernel = rwm
kernel.scale = 1.0
chain_length = 100
seed = 5
output_prefix = out/d
";
        let config = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(config.start, vec![2.0], "starts at the middle grid point");
        let negative = text.replace("0.1 0.2 0.3 0.4", "0.1 -0.2 0.3 0.4");
        assert!(ExperimentConfig::from_text(&negative).is_err());
        let single = text.replace("0.1 0.2 0.3 0.4", "0.7");
        assert!(ExperimentConfig::from_text(&single).is_err());
    }

    #[test]
    fn env_var_overrides_the_seed() {
        let mut config = ExperimentConfig::from_text(TOY).unwrap();
        std::env::set_var("MH_SEED", "4242");
        config.apply_env_seed().unwrap();
        assert_eq!(config.seed, 4242);
        std::env::set_var("MH_SEED", "not-a-seed");
        assert!(config.apply_env_seed().is_err());
        std::env::remove_var("MH_SEED");
        config.seed = 7;
        config.apply_env_seed().unwrap();
        assert_eq!(config.seed, 7);
    }

    #[test]
    fn pseudo_marginal_kernel_defaults() {
        let text = TOY.replace("kernel = rwm", "kernel = pseudo-marginal");
        let config = ExperimentConfig::from_text(&text).unwrap();
        assert_eq!(
            config.kernel,
            KernelSpec::PseudoMarginal {
                walk: WalkKind::Uniform,
                scales: vec![1.0],
                noise_sd: 1.0,
            }
        );
    }
}
