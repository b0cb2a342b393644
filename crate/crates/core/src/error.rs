use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A factor, walk or blossom violates a structural rule.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("no perfect f-factor exists")]
    Infeasible,

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("limits exceeded: {0}")]
    LimitsExceeded(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
