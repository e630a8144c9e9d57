//! Session manifest: which corpus file backs each collection, and its cost
//! profile. Postings are never persisted; they are rebuilt from these
//! corpora whenever a process needs to search.
//!
//! One JSON object per line, in collection-name order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::broker::Engine;
use crate::directory::{CoriParams, CostEstimate, Directory};
use crate::error::{Error, Result};
use crate::index::{CollectionId, CollectionSet};

/// Where the manifest for a directory index lives: next to it, with
/// `.sources` appended to the file name.
pub fn sources_path(index: &Path) -> PathBuf {
    let mut name = index.as_os_str().to_owned();
    name.push(".sources");
    PathBuf::from(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionSource {
    pub collection: CollectionId,
    pub corpus: PathBuf,
    #[serde(default)]
    pub est_latency_ms: u64,
    #[serde(default)]
    pub price: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Session {
    sources: BTreeMap<CollectionId, CollectionSource>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads a manifest; a missing file is an empty session.
    pub fn load(path: &Path) -> Result<Self> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let mut session = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let source: CollectionSource =
                serde_json::from_str(line).map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            session.upsert(source);
        }
        Ok(session)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for source in self.sources.values() {
            out.push_str(&serde_json::to_string(source).expect("source serializes"));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Adds or replaces the entry for `source.collection`.
    pub fn upsert(&mut self, source: CollectionSource) {
        self.sources.insert(source.collection.clone(), source);
    }

    pub fn sources(&self) -> impl Iterator<Item = &CollectionSource> + '_ {
        self.sources.values()
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn costs(&self) -> BTreeMap<CollectionId, CostEstimate> {
        self.sources
            .values()
            .map(|s| {
                (
                    s.collection.clone(),
                    CostEstimate {
                        est_latency_ms: s.est_latency_ms,
                        price: s.price,
                    },
                )
            })
            .collect()
    }

    /// Ingests every corpus into a fresh collection set.
    pub fn ingest(&self) -> Result<CollectionSet> {
        let mut set = CollectionSet::new();
        for source in self.sources.values() {
            set.load_corpus(&source.corpus, &source.collection)?;
        }
        Ok(set)
    }

    /// Ingests and configures a new engine.
    pub fn build_engine(&self, params: CoriParams) -> Result<Engine> {
        if self.is_empty() {
            return Err(Error::InvalidState("session has no collections".into()));
        }
        Engine::build(self.ingest()?, &self.costs(), params)
    }

    /// Pairs a saved directory index with freshly ingested corpora.
    pub fn open_engine(&self, index: &Path) -> Result<Engine> {
        let directory = Directory::load(index)?;
        Engine::from_index(directory, self.ingest()?)
    }

    /// Loads the index at `index` together with its sidecar manifest.
    pub fn open_index(index: &Path) -> Result<(Session, Engine)> {
        let directory = Directory::load(index)?;
        let session = Session::load(&sources_path(index))?;
        let engine = Engine::from_index(directory, session.ingest()?)?;
        Ok((session, engine))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip_and_upsert() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("session");
        assert!(Session::load(&path).unwrap().is_empty());

        let mut s = Session::new();
        for (name, latency) in [("DB2", 5), ("DB1", 7), ("DB2", 9)] {
            s.upsert(CollectionSource {
                collection: CollectionId::new(name).unwrap(),
                corpus: tmp.path().join(format!("{name}.jsonl")),
                est_latency_ms: latency,
                price: 0.5,
            });
        }
        s.save(&path).unwrap();
        let loaded = Session::load(&path).unwrap();
        assert_eq!(loaded, s);
        assert_eq!(loaded.len(), 2);
        assert_eq!(
            loaded.costs()[&CollectionId::new("DB2").unwrap()].est_latency_ms,
            9
        );
        assert!(matches!(
            Session::new().build_engine(CoriParams::default()),
            Err(Error::InvalidState(_))
        ));
    }
}
