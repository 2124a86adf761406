use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("relay matrix {index} violates G G^H = I/N (max deviation {deviation:.3e})")]
    SchemeInvalid { index: usize, deviation: f64 },

    #[error("resource limit: {what} requires {required}, allowed {allowed}")]
    ResourceLimit {
        what: String,
        required: f64,
        allowed: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::SchemeInvalid { .. } | Error::Domain(_) | Error::Parse { .. } => 2,
            Error::ResourceLimit { .. } => 3,
            Error::InternalConsistency(_) => 4,
            Error::Io { .. } | Error::Csv(_) => 5,
            Error::InsufficientData(_) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
