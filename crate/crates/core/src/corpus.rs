//! Corpus files, tokenization and the document records fed into collections.
//!
//! A corpus file is newline-delimited JSON: one object per line with a
//! required `url` and optional `title`, `body` and `topic`. Blank lines and
//! lines starting with `#` are skipped.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stemmer::{self, Stem, Word};

/// Function words dropped by [`tokenize`]. Frozen: changing this list changes
/// every document-frequency statistic.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "have",
    "he", "in", "is", "it", "its", "not", "of", "on", "or", "she", "that", "the", "their", "they",
    "this", "to", "was", "were", "which", "will", "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Splits text into lowercase `a-z` runs, dropping single letters and stopwords.
pub fn tokenize(text: &str) -> Vec<Word> {
    let lowered = text.to_ascii_lowercase();
    lowered
        .split(|c: char| !c.is_ascii_lowercase())
        .filter(|t| t.len() > 1 && !is_stopword(t))
        .map(|t| Word::new(t).expect("split yields a-z runs"))
        .collect()
}

/// Tokenizes and stems, returning per-stem occurrence counts.
pub fn term_counts(text: &str) -> BTreeMap<Stem, u32> {
    let mut counts = BTreeMap::new();
    for word in tokenize(text) {
        *counts.entry(stemmer::stem(&word)).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

impl RawDocument {
    pub fn new(url: impl Into<String>, body: impl Into<String>) -> Self {
        RawDocument {
            url: url.into(),
            title: None,
            body: Some(body.into()),
            topic: None,
        }
    }

    /// Title and body joined with equal weight.
    pub fn text(&self) -> String {
        match (&self.title, &self.body) {
            (Some(t), Some(b)) => format!("{t}\n{b}"),
            (Some(t), None) => t.clone(),
            (None, Some(b)) => b.clone(),
            (None, None) => String::new(),
        }
    }

    /// Encodes the record as one corpus-file line (no trailing newline).
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("document serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDocument {
    pub url: String,
    pub terms: BTreeMap<Stem, u32>,
}

impl TokenizedDocument {
    pub fn from_raw(doc: &RawDocument) -> Self {
        TokenizedDocument {
            url: doc.url.clone(),
            terms: term_counts(&doc.text()),
        }
    }
}

/// Parses corpus text. `origin` only labels errors.
pub fn parse_corpus(text: &str, origin: &Path) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line: line_no,
            reason,
        };
        let doc: RawDocument =
            serde_json::from_str(trimmed).map_err(|e| parse_err(e.to_string()))?;
        if doc.url.trim().is_empty() {
            return Err(parse_err("empty url".into()));
        }
        if !seen.insert(doc.url.clone()) {
            return Err(Error::DuplicateDocument {
                collection: origin.display().to_string(),
                url: doc.url,
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_corpus(path: &Path) -> Result<Vec<RawDocument>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, path)
}

/// Writes documents in corpus-file format.
pub fn write_corpus(path: &Path, docs: &[RawDocument]) -> Result<()> {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&doc.to_line());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
