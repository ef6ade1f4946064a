use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("unsupported schema_version {found:?}, expected \"1\"")]
    Version { found: String },

    /// A field of a named record violates its invariant.
    #[error("invalid `{field}` for {subject}: {reason}")]
    Validation {
        subject: String,
        field: String,
        reason: String,
    },

    #[error("{group} weights sum to {sum}, expected 1 (tolerance 1e-9)")]
    WeightSum { group: &'static str, sum: f64 },

    #[error("{name} = {value} is outside {range}")]
    Range {
        name: String,
        value: f64,
        range: &'static str,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("zero denominator: {0}")]
    DivisionGuard(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("fabric capacity must be positive and finite, got {0}")]
    Budget(f64),

    #[error("exhaustive search supports at most {max} IPs, got {found}")]
    Size { max: usize, found: usize },

    #[error("plan coverage violated: {0}")]
    Coverage(String),

    #[error("plan uses {used} area units but capacity is {capacity}")]
    Capacity { used: f64, capacity: f64 },

    #[error("plan accounting mismatch: recorded used_area {recorded}, actual {actual}")]
    Accounting { recorded: f64, actual: f64 },

    #[error("anchor {anchor} kg is not above the app-development floor {floor} kg")]
    InfeasibleAnchor { anchor: f64, floor: f64 },

    #[error("scenario grids differ: {0}")]
    GridMismatch(String),

    #[error("temperature {temp} outside curve range [{lo}, {hi}]")]
    TemperatureOutOfRange { temp: f64, lo: f64, hi: f64 },

    #[error("block {0} is not assigned to a known region")]
    UnassignedBlock(String),

    #[error("total block size {demand} exceeds total region capacity {supply}")]
    InfeasibleCapacity { demand: f64, supply: f64 },
}

impl Error {
    pub(crate) fn validation(
        subject: impl Into<String>,
        field: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Error::Validation {
            subject: subject.into(),
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    ///
    /// 1 for bad input, 2 for I/O failures, 3 for broken internal invariants.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 2,
            Error::Coverage(_) | Error::Capacity { .. } | Error::Accounting { .. } => 3,
            _ => 1,
        }
    }
}
