use std::path::PathBuf;

/// Errors raised by the computation library and the data loaders.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter violates its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A formula was evaluated outside the region where it is defined.
    #[error("numerical domain error: {0}")]
    Domain(String),

    /// A lookup or interpolation was requested outside tabulated data.
    #[error("out of range: {0}")]
    Range(String),

    /// A data file could not be parsed.
    #[error("{source_name}: line {line}: {msg}")]
    Parse {
        source_name: String,
        line: u64,
        msg: String,
    },

    /// A parsed data file violates one of its invariants.
    #[error("{source_name}: {rule}")]
    Validation { source_name: String, rule: String },

    #[error("checksum mismatch for {path}: expected {expected}, found {found}")]
    Checksum {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}: {err}")]
    Io {
        path: PathBuf,
        #[source]
        err: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub(crate) fn validation(source_name: &str, rule: impl Into<String>) -> Self {
        Error::Validation {
            source_name: source_name.to_string(),
            rule: rule.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2: usage or parameter validation, 3: data format, 4: numerical domain.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidParameter(_) => 2,
            Error::Parse { .. } | Error::Validation { .. } | Error::Checksum { .. } | Error::Io { .. } => 3,
            Error::Domain(_) | Error::Range(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
