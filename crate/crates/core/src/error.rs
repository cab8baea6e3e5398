use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid pair ({0}, {1}): arms must be distinct")]
    InvalidPair(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point lies on the boundary between arms {0} and {1}")]
    Boundary(usize, usize),

    #[error("utilities of arms {0} and {1} are not distinct")]
    UtilityTie(usize, usize),

    #[error("preference oracle violates {0}")]
    InconsistentOracle(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("all candidate cells name arm {arm} as best; runner-up is {runner_up}")]
    DegenerateCandidates { arm: usize, runner_up: usize },

    #[error("posterior mass vanished after update")]
    PosteriorUnderflow,

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("at step {t}: {source}")]
    AtStep { t: usize, source: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
