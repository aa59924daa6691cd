use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physics parameter lies outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("invalid input: {0}")]
    Input(String),

    /// Input data without enough spread for the requested projection.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("model shape mismatch: {0}")]
    Shape(String),

    /// Target and candidate drawn from the same upper/lower group.
    #[error("group protocol violation: {0}")]
    Protocol(String),

    #[error("unknown id: {0}")]
    NotFound(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("storage error: {0}")]
    Storage(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, shared by the CLI and the HTTP service.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ParamDomain(_) => "param_domain",
            Error::Input(_) => "invalid_input",
            Error::Degenerate(_) => "degenerate_input",
            Error::Shape(_) => "shape_mismatch",
            Error::Protocol(_) => "group_protocol",
            Error::NotFound(_) => "not_found",
            Error::Parse { .. } => "parse_error",
            Error::Version { .. } => "version_mismatch",
            Error::Invariant(_) => "invariant_violation",
            Error::Integrity(_) => "integrity_error",
            Error::Storage(_) => "storage_error",
        }
    }
}
