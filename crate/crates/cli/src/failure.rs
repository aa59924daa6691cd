//! Process-level errors: one stable code, one exit status, one output line.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    #[serde(rename = "error")]
    pub code: &'static str,
    pub message: String,
}

/// Exit status per error code. 1 is reserved for anything unclassified.
pub const EXIT_CODES: &[(&str, i32)] = &[
    ("usage", 2),
    ("file_not_found", 3),
    ("invariant_violation", 4),
    ("parse_error", 5),
    ("version_mismatch", 6),
    ("integrity_error", 7),
    ("shape_mismatch", 8),
    ("param_domain", 9),
    ("invalid_input", 10),
    ("degenerate_input", 11),
    ("group_protocol", 12),
    ("not_found", 13),
    ("storage_error", 14),
];

impl Failure {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    pub fn exit_code(&self) -> i32 {
        EXIT_CODES.iter().find(|(c, _)| *c == self.code).map_or(1, |&(_, n)| n)
    }

    /// Single-line JSON, safe for multi-line messages.
    pub fn line(&self) -> String {
        serde_json::to_string(self).expect("plain strings serialize")
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<slipforge_core::Error> for Failure {
    fn from(e: slipforge_core::Error) -> Self {
        match &e {
            slipforge_core::Error::Storage(io) if io.kind() == std::io::ErrorKind::NotFound => {
                Self::new("file_not_found", e.to_string())
            }
            _ => Self::new(e.code(), e.to_string()),
        }
    }
}

/// Attaches the offending path to a missing-file error.
pub fn with_path(path: &std::path::Path) -> impl FnOnce(slipforge_core::Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        if !f.message.contains(&*path.to_string_lossy()) {
            f.message = format!("{}: {}", path.display(), f.message);
        }
        f
    }
}
