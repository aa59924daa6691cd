//! Append-only record of human verdicts on suggested matches.
//!
//! One JSON record per line. Writers take an exclusive advisory lock on the
//! file, assign the next id, append one line and `fsync` before returning.
//! Readers never lock; they replay whatever complete lines exist.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Confirmed,
    Rejected,
}

impl std::str::FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "confirmed" => Ok(Verdict::Confirmed),
            "rejected" => Ok(Verdict::Rejected),
            other => Err(Error::Input(format!("unknown verdict {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub record_id: u64,
    pub target_id: String,
    pub candidate_id: String,
    pub verdict: Verdict,
    pub method: String,
    pub rank_shown: Option<usize>,
    pub confidence_shown: Option<f64>,
    #[serde(default)]
    pub note: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

/// A verdict before the ledger assigns its id and timestamp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewMatch {
    pub target_id: String,
    pub candidate_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub method: String,
    #[serde(default)]
    pub rank_shown: Option<usize>,
    #[serde(default)]
    pub confidence_shown: Option<f64>,
    #[serde(default)]
    pub note: String,
}

impl NewMatch {
    fn validate(&self) -> Result<()> {
        if self.target_id.is_empty() || self.candidate_id.is_empty() {
            return Err(Error::Input("target_id and candidate_id are required".into()));
        }
        if let Some(c) = self.confidence_shown {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Input(format!("confidence_shown {c} outside [0, 1]")));
            }
        }
        if self.note.contains('\0') {
            return Err(Error::Input("note contains a NUL byte".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchFilter {
    pub target_id: Option<String>,
    pub candidate_id: Option<String>,
}

impl MatchFilter {
    pub fn target(id: impl Into<String>) -> Self {
        Self { target_id: Some(id.into()), candidate_id: None }
    }

    fn accepts(&self, r: &MatchRecord) -> bool {
        self.target_id.as_deref().is_none_or(|t| t == r.target_id)
            && self.candidate_id.as_deref().is_none_or(|c| c == r.candidate_id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarantinedLine {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerScan {
    pub records: Vec<MatchRecord>,
    pub quarantined: Vec<QuarantinedLine>,
}

fn scan_bytes(bytes: &[u8]) -> LedgerScan {
    let mut scan = LedgerScan::default();
    let complete = bytes.ends_with(b"\n");
    let mut lines: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    // split leaves an empty tail after the final newline
    if complete || bytes.is_empty() {
        lines.pop();
    }
    let last = lines.len();
    for (i, raw) in lines.into_iter().enumerate() {
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        if !complete && i + 1 == last {
            scan.quarantined.push(QuarantinedLine { line: i + 1, reason: "unterminated trailing line".into() });
            continue;
        }
        match serde_json::from_slice::<MatchRecord>(raw) {
            Ok(r) => scan.records.push(r),
            Err(e) => scan.quarantined.push(QuarantinedLine { line: i + 1, reason: e.to_string() }),
        }
    }
    scan
}

/// Replays the ledger at `path`. A missing file is an empty ledger.
pub fn list_matches(path: impl AsRef<Path>, filter: &MatchFilter) -> Result<LedgerScan> {
    let path = path.as_ref();
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let mut scan = scan_bytes(&bytes);
    for q in &scan.quarantined {
        log::warn!("ledger {}: skipping line {}: {}", path.display(), q.line, q.reason);
    }
    scan.records.retain(|r| filter.accepts(r));
    Ok(scan)
}

/// Appends one verdict under the file lock and returns the stored record.
pub fn append_match(path: impl AsRef<Path>, new: NewMatch) -> Result<MatchRecord> {
    new.validate()?;
    let path = path.as_ref();
    let mut file: File = OpenOptions::new().create(true).append(true).read(true).open(path)?;
    file.lock()?;
    let result = (|| {
        let existing = std::fs::read(path)?;
        let next_id = scan_bytes(&existing).records.iter().map(|r| r.record_id).max().map_or(1, |m| m + 1);
        let record = MatchRecord {
            record_id: next_id,
            target_id: new.target_id,
            candidate_id: new.candidate_id,
            verdict: new.verdict,
            method: new.method,
            rank_shown: new.rank_shown,
            confidence_shown: new.confidence_shown,
            note: new.note,
            timestamp: now_rfc3339(),
        };
        let mut line = serde_json::to_string(&record).map_err(|e| Error::Input(e.to_string()))?;
        line.push('\n');
        if !existing.is_empty() && !existing.ends_with(b"\n") {
            // seal a torn write from an earlier crash so it stays quarantined
            line.insert(0, '\n');
        }
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(record)
    })();
    file.unlock()?;
    result
}

fn now_rfc3339() -> String {
    let now: DateTime<Utc> = Utc::now();
    now.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Shared handle used by long-running processes; serializes in-process
/// writers before they contend for the file lock.
#[derive(Debug)]
pub struct Ledger {
    path: PathBuf,
    writer: Mutex<()>,
}

impl Ledger {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, writer: Mutex::new(()) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, new: NewMatch) -> Result<MatchRecord> {
        let _guard = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        append_match(&self.path, new)
    }

    pub fn list(&self, filter: &MatchFilter) -> Result<LedgerScan> {
        list_matches(&self.path, filter)
    }
}
