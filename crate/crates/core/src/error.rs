use thiserror::Error;

/// Errors raised by the simulator, the games and the optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("gate error: {0}")]
    Gate(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("precondition error: {0}")]
    Precondition(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("search failure: {0}")]
    SearchFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// The message without the category prefix.
    pub fn detail(&self) -> &str {
        match self {
            Error::Size(m)
            | Error::Index(m)
            | Error::Gate(m)
            | Error::Parameter(m)
            | Error::Precondition(m)
            | Error::Data(m)
            | Error::NoSolution(m)
            | Error::SearchFailure(m) => m,
        }
    }
}
