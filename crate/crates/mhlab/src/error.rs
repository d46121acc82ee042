//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or kernel parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A function argument violates its contract (dimension mismatch,
    /// empty window, unnormalized weights, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The kernel cannot run against this target (e.g. MALA on a
    /// target without a gradient).
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    /// A transition produced a non-finite position; the chain aborts.
    #[error("kernel failure at iteration {iteration}: {message}")]
    KernelFailure { iteration: u64, message: String },

    /// A series has no variance (or is too short) for the requested
    /// diagnostic.
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    /// An adaptor was updated after freezing.
    #[error("adaptor is frozen; scales can no longer change")]
    FrozenAdaptor,

    /// A pseudo-marginal estimator broke its contract (non-finite or
    /// negative estimate).
    #[error("estimator contract violated: {0}")]
    EstimatorContract(String),

    /// Every particle weight vanished at the given filter step.
    #[error("particle filter collapsed at step {step}: all weights are zero")]
    FilterCollapse { step: usize },

    /// A configuration file could not be parsed or validated.
    /// `line` is 0 when the problem is not tied to a single line.
    #[error("config error{}: {message}", fmt_line(*.line))]
    Config { line: usize, message: String },

    /// A trace CSV file is malformed. `row` is the 1-based file line
    /// (the header is line 1).
    #[error("trace format error{}: {message}", fmt_line(*.row))]
    TraceFormat { row: usize, message: String },

    /// A data file (e.g. the observation list) is malformed.
    #[error("data file error{}: {message}", fmt_line(*.line))]
    DataFormat { line: usize, message: String },

    /// The requested histogram range contains no samples.
    #[error("empty histogram: no samples in the requested range")]
    EmptyHistogram,

    /// A trace does not contain the requested column.
    #[error("missing column: {0}")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" (line {line})")
    }
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration/input problems,
    /// 3 for kernel failures at runtime, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::TraceFormat { .. }
            | Error::DataFormat { .. }
            | Error::MissingColumn(_) => 2,
            Error::KernelFailure { .. } => 3,
            _ => 1,
        }
    }
}

pub fn invalid_parameter(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub fn invalid_argument(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
