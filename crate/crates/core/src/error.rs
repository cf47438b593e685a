use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The requested invariant level cannot be reached along the projection direction.
    /// Callers are expected to retry with a smaller time step.
    #[error("projection failure: {0}")]
    ProjectionFailure(String),

    /// No relaxation parameter was found near one.
    /// Callers are expected to retry with a smaller time step.
    #[error("relaxation failure: {0}")]
    RelaxationFailure(String),

    #[error("setup failure: {0}")]
    SetupFailure(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return invalid(format!("{what}: length {got}, expected {expected}"));
    }
    Ok(())
}
