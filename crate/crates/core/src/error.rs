use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors shared by every module in the crate.
///
/// The variants are coarse on purpose: callers dispatch on the kind (a CLI
/// maps them to exit codes), the message carries the specifics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A token id or symbol is not part of the vocabulary in use.
    Vocab(String),
    /// A length precondition failed (e.g. padding to fewer tokens than present).
    Length(String),
    /// An operation was applied to a value in the wrong state (e.g. extending
    /// a complete sequence).
    State(String),
    /// An invalid parameter or configuration value.
    Config(String),
    /// Input data is missing or malformed.
    Data(String),
    /// A search space exceeds the exhaustive-enumeration guard.
    Size(String),
    /// A batch or dataset became empty after filtering.
    Degenerate(String),
    /// A numerical computation produced NaN/inf.
    Divergence(String),
}

impl Error {
    /// The payload message, independent of the variant.
    pub fn message(&self) -> &str {
        match self {
            Error::Vocab(m)
            | Error::Length(m)
            | Error::State(m)
            | Error::Config(m)
            | Error::Data(m)
            | Error::Size(m)
            | Error::Degenerate(m)
            | Error::Divergence(m) => m,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Vocab(m) => write!(f, "vocabulary error: {m}"),
            Error::Length(m) => write!(f, "length error: {m}"),
            Error::State(m) => write!(f, "state error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Data(m) => write!(f, "data error: {m}"),
            Error::Size(m) => write!(f, "size error: {m}"),
            Error::Degenerate(m) => write!(f, "degenerate input: {m}"),
            Error::Divergence(m) => write!(f, "numerical divergence: {m}"),
        }
    }
}

impl core::error::Error for Error {}
