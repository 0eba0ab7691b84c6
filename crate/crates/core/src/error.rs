use thiserror::Error;

/// Errors raised by the library.
///
/// Each variant has a stable short code (see [`Error::code`]) that the
/// command-line front end prints on failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("order {0} outside the supported range [-4, 4]")]
    UnsupportedOrder(i32),
    #[error("argument {l} beyond the materialized range (l_max = {l_max})")]
    OutOfRange { l: i64, l_max: i64 },
    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("series diverges: {0}")]
    Divergent(String),
    #[error("solver failed: {0}")]
    SolverFailure(String),
    #[error("step law inconsistent with criticality: {0}")]
    InconsistentCriticality(String),
    #[error("weight sequence is not critical: {0}")]
    NotCritical(String),
    #[error("no critical scale found: {0}")]
    BoundaryNotFound(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("absorbed state: {0}")]
    Absorbed(String),
    #[error("trace too short: {0}")]
    InsufficientLength(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnsupportedOrder(_) => "unsupported-order",
            Error::OutOfRange { .. } => "out-of-range",
            Error::InvalidWeights(_) => "invalid-weights",
            Error::Domain(_) => "domain",
            Error::Divergent(_) => "divergent-series",
            Error::SolverFailure(_) => "solver-failure",
            Error::InconsistentCriticality(_) => "inconsistent-criticality",
            Error::NotCritical(_) => "not-critical",
            Error::BoundaryNotFound(_) => "boundary-not-found",
            Error::Unsupported(_) => "unsupported",
            Error::Absorbed(_) => "absorbed",
            Error::InsufficientLength(_) => "insufficient-length",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
