//! Topic-specific search engines: one inverted index per collection.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, RawDocument, TokenizedDocument};
use crate::error::{Error, Result};
use crate::stemmer::Stem;

/// Collection name. Exact, case-sensitive comparison; must not contain
/// whitespace or control characters so it can live in tab-separated files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CollectionId(String);

impl CollectionId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidArgument("empty collection name".into()));
        }
        if name.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(Error::InvalidArgument(format!(
                "collection name {name:?} contains whitespace or control characters"
            )));
        }
        Ok(CollectionId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CollectionId {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        CollectionId::new(value)
    }
}

impl From<CollectionId> for String {
    fn from(id: CollectionId) -> String {
        id.0
    }
}

impl fmt::Display for CollectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for CollectionId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PostingEntry {
    pub doc: u32,
    pub term_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    pub matched_terms: BTreeSet<Stem>,
    pub score: u64,
}

/// Inverted index over one collection's documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectionIndex {
    id: CollectionId,
    urls: Vec<String>,
    url_lookup: HashMap<String, u32>,
    postings: BTreeMap<Stem, Vec<PostingEntry>>,
}

impl CollectionIndex {
    pub fn new(id: CollectionId) -> Self {
        CollectionIndex {
            id,
            urls: Vec::new(),
            url_lookup: HashMap::new(),
            postings: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> &CollectionId {
        &self.id
    }

    pub fn contains_url(&self, url: &str) -> bool {
        self.url_lookup.contains_key(url)
    }

    pub fn ingest(&mut self, doc: &RawDocument) -> Result<TokenizedDocument> {
        if self.contains_url(&doc.url) {
            return Err(Error::DuplicateDocument {
                collection: self.id.to_string(),
                url: doc.url.clone(),
            });
        }
        let tokenized = TokenizedDocument::from_raw(doc);
        let doc_id = u32::try_from(self.urls.len()).expect("fewer than 2^32 documents");
        self.urls.push(doc.url.clone());
        self.url_lookup.insert(doc.url.clone(), doc_id);
        for (term, &count) in &tokenized.terms {
            self.postings
                .entry(term.clone())
                .or_default()
                .push(PostingEntry {
                    doc: doc_id,
                    term_count: count,
                });
        }
        Ok(tokenized)
    }

    pub fn record_count(&self) -> u64 {
        self.urls.len() as u64
    }

    pub fn term_df(&self, term: &Stem) -> u64 {
        self.postings.get(term).map_or(0, |p| p.len() as u64)
    }

    pub fn max_df(&self) -> u64 {
        self.postings
            .values()
            .map(|p| p.len() as u64)
            .max()
            .unwrap_or(0)
    }

    /// Every indexed term with its document frequency, in term order.
    pub fn term_dfs(&self) -> impl Iterator<Item = (&Stem, u64)> + '_ {
        self.postings.iter().map(|(t, p)| (t, p.len() as u64))
    }

    pub fn postings(&self, term: &Stem) -> &[PostingEntry] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn url(&self, doc: u32) -> &str {
        &self.urls[doc as usize]
    }

    /// OR-query: every document containing at least one term, ordered by
    /// summed occurrence count descending then URL ascending.
    pub fn search(&self, terms: &BTreeSet<Stem>, limit: usize) -> Result<Vec<SearchHit>> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("empty term set".into()));
        }
        if limit == 0 {
            return Err(Error::InvalidArgument("limit must be at least 1".into()));
        }
        let mut acc: BTreeMap<u32, (BTreeSet<Stem>, u64)> = BTreeMap::new();
        for term in terms {
            for posting in self.postings(term) {
                let entry = acc.entry(posting.doc).or_default();
                entry.0.insert(term.clone());
                entry.1 += u64::from(posting.term_count);
            }
        }
        let mut hits: Vec<SearchHit> = acc
            .into_iter()
            .map(|(doc, (matched_terms, score))| SearchHit {
                url: self.urls[doc as usize].clone(),
                matched_terms,
                score,
            })
            .collect();
        hits.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.url.cmp(&b.url)));
        hits.truncate(limit);
        Ok(hits)
    }
}

/// All collections known to one process, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectionSet {
    collections: BTreeMap<CollectionId, CollectionIndex>,
}

impl CollectionSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates an empty collection; a no-op if it already exists.
    pub fn create(&mut self, id: CollectionId) -> &mut CollectionIndex {
        self.collections
            .entry(id.clone())
            .or_insert_with(|| CollectionIndex::new(id))
    }

    pub fn get(&self, name: &str) -> Result<&CollectionIndex> {
        self.collections
            .get(name)
            .ok_or_else(|| Error::NotFound(format!("collection {name}")))
    }

    fn get_mut(&mut self, name: &str) -> Result<&mut CollectionIndex> {
        self.collections
            .get_mut(name)
            .ok_or_else(|| Error::NotFound(format!("collection {name}")))
    }

    pub fn ingest_document(
        &mut self,
        collection: &str,
        doc: &RawDocument,
    ) -> Result<TokenizedDocument> {
        self.get_mut(collection)?.ingest(doc)
    }

    /// Loads a corpus file into `collection`, creating it if needed.
    ///
    /// The whole file is parsed and checked for duplicate URLs before the
    /// collection is touched, so a failed load leaves it unchanged.
    pub fn load_corpus(&mut self, path: &Path, collection: &CollectionId) -> Result<usize> {
        let docs = corpus::read_corpus(path)?;
        let index = self.create(collection.clone());
        if let Some(dup) = docs.iter().find(|d| index.contains_url(&d.url)) {
            return Err(Error::DuplicateDocument {
                collection: collection.to_string(),
                url: dup.url.clone(),
            });
        }
        for doc in &docs {
            index.ingest(doc)?;
        }
        Ok(docs.len())
    }

    pub fn term_df(&self, collection: &str, term: &Stem) -> Result<u64> {
        Ok(self.get(collection)?.term_df(term))
    }

    pub fn max_df(&self, collection: &str) -> Result<u64> {
        Ok(self.get(collection)?.max_df())
    }

    pub fn record_count(&self, collection: &str) -> Result<u64> {
        Ok(self.get(collection)?.record_count())
    }

    pub fn search(
        &self,
        collection: &str,
        terms: &BTreeSet<Stem>,
        limit: usize,
    ) -> Result<Vec<SearchHit>> {
        self.get(collection)?.search(terms, limit)
    }

    pub fn len(&self) -> usize {
        self.collections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.collections.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &CollectionId> + '_ {
        self.collections.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CollectionIndex> + '_ {
        self.collections.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stemmer::stem_str;

    fn id(name: &str) -> CollectionId {
        CollectionId::new(name).unwrap()
    }

    fn terms(words: &[&str]) -> BTreeSet<Stem> {
        words.iter().map(|w| stem_str(w).unwrap()).collect()
    }

    fn set_with(docs: &[(&str, &str)]) -> CollectionSet {
        let mut set = CollectionSet::new();
        set.create(id("DB1"));
        for (url, body) in docs {
            set.ingest_document("DB1", &RawDocument::new(*url, *body))
                .unwrap();
        }
        set
    }

    #[test]
    fn collection_id_validation() {
        assert!(CollectionId::new("").is_err());
        assert!(CollectionId::new("DB 1").is_err());
        assert!(CollectionId::new("DB\t1").is_err());
        assert_ne!(id("db1"), id("DB1"));
    }

    #[test]
    fn ingest_conflates_to_connect() {
        let mut set = CollectionSet::new();
        set.create(id("DB1"));
        let tok = set
            .ingest_document(
                "DB1",
                &RawDocument::new("http://x/1", "connected connections"),
            )
            .unwrap();
        assert_eq!(tok.terms.len(), 1);
        assert_eq!(tok.terms[&stem_str("connect").unwrap()], 2);
    }

    #[test]
    fn ingest_duplicate_and_unknown() {
        let mut set = set_with(&[("http://x/1", "a b")]);
        assert!(matches!(
            set.ingest_document("DB1", &RawDocument::new("http://x/1", "again")),
            Err(Error::DuplicateDocument { .. })
        ));
        assert!(matches!(
            set.ingest_document("DB9", &RawDocument::new("http://x/2", "")),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn empty_body_is_stored_but_matches_nothing() {
        let mut set = set_with(&[]);
        let tok = set
            .ingest_document("DB1", &RawDocument::new("http://x/2", ""))
            .unwrap();
        assert!(tok.terms.is_empty());
        assert_eq!(set.record_count("DB1").unwrap(), 1);
        assert_eq!(set.max_df("DB1").unwrap(), 0);
    }

    #[test]
    fn df_counts_documents_not_occurrences() {
        let set = set_with(&[("http://x/1", "river river river river river")]);
        assert_eq!(set.term_df("DB1", &stem_str("river").unwrap()).unwrap(), 1);
        assert_eq!(set.max_df("DB1").unwrap(), 1);
    }

    #[test]
    fn df_over_ten_documents() {
        let docs: Vec<(String, &str)> = (0..10)
            .map(|i| {
                (
                    format!("http://x/{i}"),
                    if i < 3 { "river bank" } else { "bank" },
                )
            })
            .collect();
        let refs: Vec<(&str, &str)> = docs.iter().map(|(u, b)| (u.as_str(), *b)).collect();
        let set = set_with(&refs);
        assert_eq!(set.term_df("DB1", &stem_str("river").unwrap()).unwrap(), 3);
        assert_eq!(set.term_df("DB1", &stem_str("ocean").unwrap()).unwrap(), 0);
        assert_eq!(set.max_df("DB1").unwrap(), 10);
    }

    #[test]
    fn max_df_of_several_terms() {
        // dfs: alpha 2, beta 7, gamma 3
        let mut docs = Vec::new();
        for i in 0..7 {
            let mut body = String::from("beta");
            if i < 2 {
                body.push_str(" alpha");
            }
            if i < 3 {
                body.push_str(" gamma");
            }
            docs.push((format!("http://x/{i}"), body));
        }
        let refs: Vec<(&str, &str)> = docs.iter().map(|(u, b)| (u.as_str(), b.as_str())).collect();
        let set = set_with(&refs);
        assert_eq!(set.max_df("DB1").unwrap(), 7);
    }

    #[test]
    fn fresh_collection_is_empty() {
        let set = set_with(&[]);
        assert_eq!(set.record_count("DB1").unwrap(), 0);
        assert_eq!(set.max_df("DB1").unwrap(), 0);
        assert!(matches!(set.record_count("nope"), Err(Error::NotFound(_))));
    }

    #[test]
    fn search_orders_by_frequency() {
        let set = set_with(&[
            ("http://b", "river"),
            ("http://a", "river river river"),
            ("http://c", "ocean"),
        ]);
        let hits = set.search("DB1", &terms(&["river"]), 10).unwrap();
        let got: Vec<_> = hits.iter().map(|h| (h.url.as_str(), h.score)).collect();
        assert_eq!(got, [("http://a", 3), ("http://b", 1)]);
    }

    #[test]
    fn search_tie_breaks_by_url() {
        let set = set_with(&[
            ("http://z", "river"),
            ("http://m", "river"),
            ("http://a", "ocean"),
        ]);
        let hits = set.search("DB1", &terms(&["river"]), 10).unwrap();
        let urls: Vec<_> = hits.iter().map(|h| h.url.as_str()).collect();
        assert_eq!(urls, ["http://m", "http://z"]);
    }

    #[test]
    fn search_is_or_and_sums_counts() {
        let set = set_with(&[("http://a", "river ocean ocean"), ("http://b", "ocean")]);
        let hits = set.search("DB1", &terms(&["river", "ocean"]), 10).unwrap();
        assert_eq!(hits[0].url, "http://a");
        assert_eq!(hits[0].score, 3);
        assert_eq!(hits[0].matched_terms.len(), 2);
        assert_eq!(hits[1].score, 1);
    }

    #[test]
    fn search_no_match_and_limits() {
        let set = set_with(&[("http://a", "river"), ("http://b", "river")]);
        assert!(set
            .search("DB1", &terms(&["desert"]), 5)
            .unwrap()
            .is_empty());
        assert_eq!(set.search("DB1", &terms(&["river"]), 1).unwrap().len(), 1);
        assert!(matches!(
            set.search("DB1", &BTreeSet::new(), 5),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            set.search("DB1", &terms(&["river"]), 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            set.search("DB2", &terms(&["river"]), 1),
            Err(Error::NotFound(_))
        ));
    }
}
