use std::path::PathBuf;

/// Errors raised by the simulation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("duration {duration_s} s is shorter than one time step of {time_step_s} s")]
    DurationTooShort { duration_s: f64, time_step_s: f64 },

    #[error("time {t_s} s lies outside the realization span [{start_s}, {end_s}] s")]
    OutOfSpan { t_s: f64, start_s: f64, end_s: f64 },

    #[error("negative time {0} s")]
    NegativeTime(f64),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("zero-forcing singularity at unit {unit}: |CSI estimate| = {magnitude:e}")]
    ZfSingular { unit: usize, magnitude: f64 },

    #[error("feature-channel count {0} is odd")]
    OddChannelCount(usize),

    #[error("importance order is not a permutation of 1..={0}")]
    NotAPermutation(usize),

    #[error("ground-truth CSI is all zero")]
    ZeroGroundTruth,

    #[error("need at least {min} samples, got {actual}")]
    TooFewSamples { min: usize, actual: usize },

    #[error("image format: {0}")]
    ImageFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
