//! Append-only log of handled queries and the summary report over it.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::CollectionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routing {
    /// Collections chosen by directory scoring.
    Directory,
    /// Caller named the target collection; scoring was skipped.
    Bypass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    NoEligibleDatabase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub seq: u64,
    pub query: String,
    pub terms: Vec<String>,
    pub routing: Routing,
    pub selected: Vec<CollectionId>,
    pub hits: usize,
    pub outcome: Outcome,
    /// Free-form service-quality hint from the request; recorded only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_quality: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub seq: u64,
    pub terms: usize,
    pub collections_selected: usize,
    pub hits: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivitySummary {
    pub queries: Vec<QueryCounts>,
    pub total_hits: usize,
    pub bypassed: usize,
    pub no_eligible: usize,
}

impl ActivitySummary {
    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

pub fn summarize(records: &[QueryRecord]) -> ActivitySummary {
    let mut summary = ActivitySummary::default();
    for r in records {
        summary.queries.push(QueryCounts {
            seq: r.seq,
            terms: r.terms.len(),
            collections_selected: r.selected.len(),
            hits: r.hits,
        });
        summary.total_hits += r.hits;
        summary.bypassed += usize::from(r.routing == Routing::Bypass);
        summary.no_eligible += usize::from(r.outcome == Outcome::NoEligibleDatabase);
    }
    summary
}

/// Reads a log file written by [`ActivityLog::with_file`].
pub fn read_log(path: &Path) -> Result<Vec<QueryRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

struct LogState {
    records: Vec<QueryRecord>,
    sink: Option<(PathBuf, BufWriter<File>)>,
}

/// In-memory query log, optionally mirrored to a JSON-lines file.
pub struct ActivityLog {
    state: Mutex<LogState>,
}

impl Default for ActivityLog {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for ActivityLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ActivityLog")
            .field("records", &self.len())
            .finish()
    }
}

impl ActivityLog {
    pub fn new() -> Self {
        ActivityLog {
            state: Mutex::new(LogState {
                records: Vec::new(),
                sink: None,
            }),
        }
    }

    /// Appends to `path`, continuing its sequence numbering.
    pub fn with_file(path: &Path) -> Result<Self> {
        let existing = if path.exists() {
            read_log(path)?
        } else {
            Vec::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(ActivityLog {
            state: Mutex::new(LogState {
                records: existing,
                sink: Some((path.to_path_buf(), BufWriter::new(file))),
            }),
        })
    }

    /// Assigns the next sequence number and appends.
    pub fn append(&self, mut record: QueryRecord) -> Result<u64> {
        let mut state = self.state.lock().expect("activity log poisoned");
        record.seq = state.records.last().map_or(1, |r| r.seq + 1);
        let seq = record.seq;
        if let Some((path, sink)) = state.sink.as_mut() {
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(sink, "{line}")
                .and_then(|_| sink.flush())
                .map_err(|e| Error::io(path.clone(), e))?;
        }
        state.records.push(record);
        Ok(seq)
    }

    pub fn records(&self) -> Vec<QueryRecord> {
        self.state
            .lock()
            .expect("activity log poisoned")
            .records
            .clone()
    }

    pub fn len(&self) -> usize {
        self.state
            .lock()
            .expect("activity log poisoned")
            .records
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn report(&self) -> ActivitySummary {
        summarize(&self.state.lock().expect("activity log poisoned").records)
    }
}
