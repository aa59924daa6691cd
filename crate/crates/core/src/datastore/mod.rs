//! On-disk formats.
//!
//! Every document is line-delimited JSON: a header line carrying the format
//! name and version, followed by one record per line. Floats are written in
//! shortest round-trip form, so every value reloads bit-exactly.

mod document;
mod ledger;
mod manifest;
mod model_file;

pub use document::{
    load_document, save_document, CALIBRATION_FORMAT, DOCUMENT_VERSION, MATRIX_FORMAT, PARAMS_FORMAT, REPORT_FORMAT,
};
pub use ledger::{append_match, list_matches, Ledger, LedgerScan, MatchFilter, MatchRecord, NewMatch, QuarantinedLine, Verdict};
pub use manifest::{
    load_manifest, save_manifest, DatasetManifest, Fragment, FragmentProvenance, GroundTruthPair, Group,
    MANIFEST_FORMAT, MANIFEST_VERSION,
};
pub use model_file::{load_model, model_fingerprint, save_model, MODEL_FORMAT, MODEL_VERSION};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `body` to a sibling temp file, syncs, then renames over `path`.
pub(crate) fn write_atomically(path: &Path, body: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(body)?;
        w.flush()?;
        w.get_ref().sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub(crate) fn parse_error(path: &Path, line: usize, err: impl std::fmt::Display) -> Error {
    Error::Parse { path: path.to_path_buf(), message: format!("line {line}: {err}") }
}
