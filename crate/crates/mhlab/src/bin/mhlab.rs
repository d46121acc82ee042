//! Command-line front end: run configured experiments, re-diagnose
//! saved traces, bin them into histograms, and compare chains.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mhlab::config::{ExperimentConfig, TargetSpec};
use mhlab::runner;
use mhlab::trace::Trace;
use mhlab::Result;

#[derive(Parser)]
#[command(name = "mhlab", version, about = "Metropolis-Hastings sampling lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        /// Path to a key=value config file.
        config: PathBuf,
        /// Number of independent replicates (distinct RNG streams,
        /// suffixed output files), run concurrently.
        #[arg(long, default_value_t = 1)]
        replicates: u64,
    },
    /// Recompute diagnostics for a saved trace.
    Diagnose {
        /// Path to a trace CSV.
        trace: PathBuf,
        /// Autocorrelation lags to report.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        lags: Option<Vec<usize>>,
        /// Samples to discard from the front (default: 10% of the chain).
        #[arg(long)]
        burn_in: Option<usize>,
    },
    /// Bin one coordinate of a trace into a density table.
    #[command(allow_negative_numbers = true)]
    Hist {
        /// Path to a trace CSV.
        trace: PathBuf,
        /// Coordinate column to bin (default: the first).
        #[arg(long)]
        col: Option<String>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Lower edge (default: sample minimum).
        #[arg(long)]
        lo: Option<f64>,
        /// Upper edge (default: sample maximum).
        #[arg(long)]
        hi: Option<f64>,
        /// Add a reference density column: "toy-sin" or "gaussian".
        #[arg(long = "ref")]
        reference: Option<String>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare one column's summaries across several traces.
    Compare {
        /// Two or more trace CSVs.
        #[arg(num_args = 2..)]
        traces: Vec<PathBuf>,
        /// Coordinate column to compare.
        #[arg(long)]
        col: String,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // A downstream consumer closing the pipe is not an error.
        Err(mhlab::Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

/// Writes to stdout through the error type so a closed pipe is handled
/// instead of panicking.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, replicates } => {
            let mut config = ExperimentConfig::from_file(&config)?;
            config.apply_env_seed()?;
            if replicates == 0 {
                return Err(mhlab::error::invalid_argument(
                    "need at least one replicate",
                ));
            }
            let outputs = if replicates == 1 {
                vec![runner::run_experiment(&config)?]
            } else {
                runner::run_replicates(&config, replicates)?
            };
            let mut lines = String::new();
            for out in &outputs {
                use std::fmt::Write;
                let _ = writeln!(lines, "trace:  {}", out.trace_path.display());
                let _ = writeln!(lines, "report: {}", out.report_path.display());
                if let Some(path) = &out.warmup_path {
                    let _ = writeln!(lines, "warmup: {}", path.display());
                }
                if let Some(path) = &out.latent_path {
                    let _ = writeln!(lines, "latent: {}", path.display());
                }
                let min_ess = out
                    .report
                    .min_ess
                    .map_or("n/a".to_string(), |v| format!("{v:.1}"));
                let _ = writeln!(
                    lines,
                    "accept rate {:.4}, min ess {}",
                    out.report.acceptance_rate, min_ess
                );
            }
            emit(&lines)
        }
        Command::Diagnose {
            trace,
            lags,
            burn_in,
        } => {
            let report = runner::diagnose(&trace, lags.as_deref(), burn_in)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| mhlab::error::invalid_argument(e.to_string()))?;
            emit(&format!("{json}\n"))
        }
        Command::Hist {
            trace,
            col,
            bins,
            lo,
            hi,
            reference,
            out,
        } => {
            let trace = Trace::load(&trace)?;
            let values = match &col {
                Some(name) => trace.coordinate_by_name(name)?,
                None => trace.coordinate(0)?,
            };
            let lo = lo.unwrap_or_else(|| values.iter().copied().fold(f64::INFINITY, f64::min));
            let hi = hi.unwrap_or_else(|| values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let target = match reference.as_deref() {
                None => None,
                Some("toy-sin") => Some(runner::build_target(&TargetSpec::ToySin)?.unwrap()),
                Some("gaussian") => {
                    Some(runner::build_target(&TargetSpec::Gaussian { dim: 1 })?.unwrap())
                }
                Some(other) => {
                    return Err(mhlab::error::invalid_argument(format!(
                        "unknown reference {other:?}; expected toy-sin or gaussian"
                    )))
                }
            };
            let table = runner::histogram_table(&values, bins, lo, hi, target.as_ref())?;
            match out {
                Some(path) => {
                    let mut file = std::fs::File::create(path)?;
                    runner::write_histogram_csv(&table, &mut file)?;
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    runner::write_histogram_csv(&table, &mut stdout)?;
                }
            }
            Ok(())
        }
        Command::Compare { traces, col } => {
            if traces.len() < 2 {
                return Err(mhlab::error::invalid_argument(
                    "compare needs at least two traces",
                ));
            }
            let mut loaded = Vec::with_capacity(traces.len());
            for path in &traces {
                loaded.push((path.display().to_string(), Trace::load(path)?));
            }
            let table = runner::compare_traces(&loaded, &col)?;
            emit(&runner::render_compare(&table))
        }
    }
}
