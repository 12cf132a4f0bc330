use thiserror::Error;

pub type Result<T> = std::result::Result<T, BorError>;

#[derive(Debug, Error)]
pub enum BorError {
    /// Inputs outside the domain of an operation (k > n, K > N, negative rate...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A malformed line in a qrels, run, corpus or query stream. Lines are 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("no evaluable queries: {0}")]
    NoEvaluableQueries(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BorError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        BorError::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        BorError::Parse {
            line,
            message: msg.into(),
        }
    }
}
