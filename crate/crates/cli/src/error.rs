use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or out-of-range configuration.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// Integration breakdown or a failed library call.
    #[error("numerical failure in {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: thermolab::Error,
    },
    #[error("selftest failed: {failed} of {total} criteria")]
    SelftestFailed { failed: usize, total: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn numerical(context: impl Into<String>, source: thermolab::Error) -> Self {
        match source {
            thermolab::Error::InvalidArgument(msg) => CliError::Validation(format!("{}: {msg}", context.into())),
            source => CliError::Numerical {
                context: context.into(),
                source,
            },
        }
    }

    /// Process exit code: 1 for bad input (including unusable paths),
    /// 2 for numerical failures, 3 for a failed selftest.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => 1,
            CliError::Numerical { .. } => 2,
            CliError::SelftestFailed { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
