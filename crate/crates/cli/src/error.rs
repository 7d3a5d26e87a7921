use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("`{key}`: {msg}")]
    Key { key: String, msg: String },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A library failure attributed to the key that supplied the input.
    #[error("`{key}`: {source}")]
    Core {
        key: String,
        #[source]
        source: expgraph::Error,
    },

    /// A library failure whose message already names the offending quantity.
    #[error(transparent)]
    Lib(#[from] expgraph::Error),
}

impl CliError {
    pub fn key(key: &str, msg: impl Into<String>) -> Self {
        CliError::Key { key: key.to_string(), msg: msg.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core { source: expgraph::Error::Capacity { .. }, .. }
            | CliError::Lib(expgraph::Error::Capacity { .. }) => 3,
            _ => 1,
        }
    }
}

/// Attaches the responsible key to a library error.
pub trait Blame<T> {
    fn blame(self, key: &str) -> Result<T, CliError>;
}

impl<T> Blame<T> for expgraph::Result<T> {
    fn blame(self, key: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { key: key.to_string(), source })
    }
}
