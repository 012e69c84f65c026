use thiserror::Error;

/// Errors raised by simulators, couplings and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rate {rate} exceeds ceiling {ceiling} at t={time}")]
    RateCeiling { time: f64, rate: f64, ceiling: f64 },

    #[error("coordinate {coord}: rate {rate} exceeds ceiling {ceiling} at t={time}")]
    SystemRateCeiling {
        coord: usize,
        time: f64,
        rate: f64,
        ceiling: f64,
    },

    #[error("merge probability {p} outside [0, 1] at t={time}")]
    MergeProbability { time: f64, p: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model contract violated: {0}")]
    Contract(String),

    #[error("replica {index}: {source}")]
    Replica {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RateCeiling { .. } | Error::SystemRateCeiling { .. } => "rate_ceiling",
            Error::MergeProbability { .. } => "merge_probability",
            Error::Unsupported(_) => "unsupported",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::Domain(_) => "domain",
            Error::Contract(_) => "contract",
            Error::Replica { source, .. } => source.kind(),
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// Event time carried by the error, if any.
    pub fn time(&self) -> Option<f64> {
        match self {
            Error::RateCeiling { time, .. }
            | Error::SystemRateCeiling { time, .. }
            | Error::MergeProbability { time, .. } => Some(*time),
            Error::Replica { source, .. } => source.time(),
            _ => None,
        }
    }

    pub fn replica(&self) -> Option<usize> {
        match self {
            Error::Replica { index, .. } => Some(*index),
            _ => None,
        }
    }

    pub(crate) fn in_replica(self, index: usize) -> Error {
        match self {
            e @ Error::Replica { .. } => e,
            e => Error::Replica {
                index,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
