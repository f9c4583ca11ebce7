use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed probability input: negative entries, bad sums, ragged tables.
    #[error("validation error: {0}")]
    Validation(String),

    /// Caller asked for something that does not fit the objects supplied.
    #[error("usage error: {0}")]
    Usage(String),

    /// Leakage budget outside the domain of the requested construction.
    #[error("budget error: {0}")]
    Budget(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Desk-scale guard exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("construction error: {0}")]
    Construction(String),

    /// A numerical result contradicts an identity that must hold.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        // the message carries "at line L column C" when a position is known
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let at = e
            .position()
            .map(|p| format!("line {}: ", p.line()))
            .unwrap_or_default();
        Error::Parse(format!("{at}{e}"))
    }
}
