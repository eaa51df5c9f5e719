use alloc::string::String;
use core::fmt;

/// Errors produced by the core pipeline.
///
/// Each variant corresponds to a contract violation of one of the public
/// operations; the wording carries enough context to be surfaced directly
/// by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dataset-level precondition failed (empty input, duplicate id, ...).
    InvalidData(String),
    /// A numeric input violated an operation's preconditions.
    InvalidInput(String),
    /// A matrix was singular where an inverse or solve was required.
    SingularMatrix(String),
    /// A column had zero variance where correlation is required.
    ConstantColumn(String),
    /// Vector or matrix dimensions do not line up.
    DimensionMismatch(String),
    /// A named feature, column, or item was not found.
    NotFound(String),
    /// A respondent cannot be scored or encoded (e.g. no rated genres).
    Unscorable(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::SingularMatrix(msg) => write!(f, "singular matrix: {msg}"),
            Error::ConstantColumn(msg) => write!(f, "constant column: {msg}"),
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::NotFound(msg) => write!(f, "not found: {msg}"),
            Error::Unscorable(msg) => write!(f, "unscorable: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
