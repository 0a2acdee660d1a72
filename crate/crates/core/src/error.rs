use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid triple ({dki}, {dkj}, {dij}): cosine {cosine} outside [-1, 1]")]
    InvalidTriple {
        dki: f64,
        dkj: f64,
        dij: f64,
        cosine: f64,
    },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::InvariantViolation(_) => "invariant_violation",
            Error::Domain(_) => "domain",
            Error::InvalidTriple { .. } => "invalid_triple",
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::InvariantViolation(msg.into())
    }
}
