use thiserror::Error;

/// Errors raised by the distribution, bound and training routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("incompatible atoms: id `{id}` carries different coordinates")]
    IncompatibleAtoms { id: String },

    #[error("empty conditional family")]
    EmptyConditionalFamily,

    #[error("missing conditional at atom `{0}`")]
    MissingConditional(String),

    #[error("missing coordinates: {0}")]
    MissingCoordinates(String),

    #[error("invalid tail parameters: {0}")]
    InvalidTail(String),

    #[error("{0} requires zero-one loss")]
    NotZeroOne(&'static str),

    #[error("{bound} hypothesis violated: {detail}")]
    HypothesisViolated { bound: &'static str, detail: String },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("non-finite gradient in term {term}")]
    NonFiniteGradient { term: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
