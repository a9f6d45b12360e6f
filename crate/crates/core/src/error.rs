use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {features} feature vectors but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("inconsistent dimension: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label {0} is not in {{0, 1}}")]
    InvalidLabel(u8),
    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite density value {0} at query point")]
    NonFiniteDensity(f64),
    #[error("degenerate coordinate {0}: zero sample variance")]
    DegenerateCoordinate(usize),
    #[error("point lies outside the region where the model is twice differentiable")]
    OutsideDifferentiableRegion,
    #[error("{0} does not support this operation")]
    Unsupported(String),
    #[error("nonpositive {what}: {value}")]
    Nonpositive { what: &'static str, value: f64 },
    #[error("repetition {rep}: {source}")]
    Trial { rep: u64, source: Box<Error> },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
