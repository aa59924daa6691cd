//! Single-record documents: physics params, calibration results, evaluation
//! reports, similarity matrices.
//!
//! ```text
//! {"format":"slipforge-params","format_version":1}
//! {...record...}
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{parse_error, write_atomically};
use crate::error::{Error, Result};

pub const DOCUMENT_VERSION: u32 = 1;

pub const PARAMS_FORMAT: &str = "slipforge-params";
pub const CALIBRATION_FORMAT: &str = "slipforge-calibration";
pub const REPORT_FORMAT: &str = "slipforge-report";
pub const MATRIX_FORMAT: &str = "slipforge-matrix";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    format_version: u32,
}

pub fn save_document<T: Serialize>(path: impl AsRef<Path>, format: &str, record: &T) -> Result<()> {
    let header = Header { format: format.into(), format_version: DOCUMENT_VERSION };
    let mut body = serde_json::to_string(&header).map_err(|e| Error::Input(e.to_string()))?;
    body.push('\n');
    body.push_str(&serde_json::to_string(record).map_err(|e| Error::Input(e.to_string()))?);
    body.push('\n');
    write_atomically(path.as_ref(), body.as_bytes())
}

pub fn load_document<T: DeserializeOwned>(path: impl AsRef<Path>, format: &str) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| parse_error(path, 1, "empty document"))?;
    let header: Header = serde_json::from_str(first).map_err(|e| parse_error(path, 1, e))?;
    if header.format != format {
        return Err(parse_error(path, 1, format!("expected a {format} document, found {}", header.format)));
    }
    if header.format_version != DOCUMENT_VERSION {
        return Err(Error::Version { found: header.format_version, expected: DOCUMENT_VERSION });
    }
    let (i, raw) = lines.next().ok_or_else(|| parse_error(path, 2, "missing record"))?;
    let record = serde_json::from_str(raw).map_err(|e| parse_error(path, i + 1, e))?;
    if let Some((i, _)) = lines.next() {
        return Err(parse_error(path, i + 1, "trailing content after the record"));
    }
    Ok(record)
}
