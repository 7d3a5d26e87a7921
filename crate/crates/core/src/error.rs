use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    /// A node index left the representable range.
    #[error("index out of range: {0}")]
    Range(String),

    /// Materialization or enumeration would exceed the configured node cap.
    #[error("capacity exceeded: {what} needs {needed} nodes, cap is {cap}")]
    Capacity { what: String, needed: u128, cap: u128 },

    /// Every violated constraint of an inadmissible bound input.
    #[error("inadmissible input: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("infeasible grid: {0}")]
    Infeasible(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
