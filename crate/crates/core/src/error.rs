use thiserror::Error;

/// Errors raised by the fiberwise toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("unknown point id `{0}`")]
    UnknownPoint(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("hypothesis violated ({condition}): {detail}")]
    Hypothesis { condition: String, detail: String },

    #[error("budget unreachable at stage `{stage}`: achieved {achieved:e}, required {required:e}")]
    Budget {
        stage: String,
        achieved: f64,
        required: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("linear program failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn hypothesis(condition: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Hypothesis {
            condition: condition.into(),
            detail: detail.into(),
        }
    }
}
