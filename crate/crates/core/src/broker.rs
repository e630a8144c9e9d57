//! Query broker: stem the request, ask the directory which collections to
//! use, search them and merge the results.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus;
use crate::directory::{
    ActivityLog, CollectionFrequency, CoriParams, CostEstimate, Directory, Outcome, QueryRecord,
    RankedCollection, Routing, UtilityConstraints,
};
use crate::error::{Error, Result};
use crate::index::{CollectionId, CollectionSet, SearchHit};
use crate::stemmer::{self, Stem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub text: String,
    pub constraints: UtilityConstraints,
    /// Skip selection and search only this collection.
    pub target_db: Option<String>,
    /// Accepted and logged; has no effect on ranking.
    pub service_quality: Option<String>,
}

impl QueryRequest {
    pub fn new(text: impl Into<String>) -> Self {
        QueryRequest {
            text: text.into(),
            constraints: UtilityConstraints::default(),
            target_db: None,
            service_quality: None,
        }
    }

    pub fn with_constraints(mut self, constraints: UtilityConstraints) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn with_target(mut self, target: impl Into<String>) -> Self {
        self.target_db = Some(target.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcedHit {
    #[serde(flatten)]
    pub hit: SearchHit,
    pub source: CollectionId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub query: String,
    pub terms: Vec<Stem>,
    pub routing: Routing,
    pub selected: Vec<RankedCollection>,
    pub hits: Vec<SourcedHit>,
    pub per_collection_frequency: Vec<CollectionFrequency>,
    pub timing_ms: f64,
}

/// Tokenizes and stems query text into its distinct terms.
pub fn query_terms(text: &str) -> BTreeSet<Stem> {
    corpus::tokenize(text).iter().map(stemmer::stem).collect()
}

/// Orders hits by score, then by the belief of their source collection,
/// then by URL. A URL found in several collections is kept once, at its
/// best position.
pub fn merge_results(
    per_collection: Vec<(CollectionId, Vec<SearchHit>)>,
    selection: &[RankedCollection],
) -> Vec<SourcedHit> {
    let beliefs: BTreeMap<&CollectionId, f64> = selection
        .iter()
        .map(|r| (&r.collection, r.belief))
        .collect();
    let belief_of = |id: &CollectionId| beliefs.get(id).copied().unwrap_or(f64::NEG_INFINITY);

    let mut all: Vec<SourcedHit> = per_collection
        .into_iter()
        .flat_map(|(source, hits)| {
            hits.into_iter().map(move |hit| SourcedHit {
                hit,
                source: source.clone(),
            })
        })
        .collect();
    all.sort_by(|a, b| {
        b.hit
            .score
            .cmp(&a.hit.score)
            .then_with(|| {
                belief_of(&b.source)
                    .partial_cmp(&belief_of(&a.source))
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| a.hit.url.cmp(&b.hit.url))
            .then_with(|| a.source.cmp(&b.source))
    });
    let mut seen = HashSet::new();
    all.retain(|h| seen.insert(h.hit.url.clone()));
    all
}

/// A configured system: collections, their directory, and the query log.
/// Immutable apart from the log, so it can be shared across threads.
#[derive(Debug)]
pub struct Engine {
    collections: CollectionSet,
    directory: Directory,
    log: Arc<ActivityLog>,
}

impl Engine {
    pub fn build(
        collections: CollectionSet,
        costs: &BTreeMap<CollectionId, CostEstimate>,
        params: CoriParams,
    ) -> Result<Self> {
        let directory = Directory::configure(&collections, costs, params)?;
        Ok(Engine {
            collections,
            directory,
            log: Arc::new(ActivityLog::new()),
        })
    }

    /// Pairs a loaded directory index with re-ingested collections. The
    /// index must describe exactly these collections.
    pub fn from_index(directory: Directory, collections: CollectionSet) -> Result<Self> {
        let rebuilt = crate::directory::DfMatrix::configure(&collections)?;
        if &rebuilt != directory.matrix() {
            return Err(Error::CorruptIndex(
                "directory index does not match the collection corpora".into(),
            ));
        }
        Ok(Engine {
            collections,
            directory,
            log: Arc::new(ActivityLog::new()),
        })
    }

    /// Shares `log` with this engine, e.g. across reindexes.
    pub fn with_log(mut self, log: Arc<ActivityLog>) -> Self {
        self.log = log;
        self
    }

    pub fn collections(&self) -> &CollectionSet {
        &self.collections
    }

    pub fn directory(&self) -> &Directory {
        &self.directory
    }

    pub fn log(&self) -> &Arc<ActivityLog> {
        &self.log
    }

    pub fn handle_query(&self, request: &QueryRequest) -> Result<QueryResponse> {
        let started = Instant::now();
        let terms = query_terms(&request.text);
        if terms.is_empty() {
            return Err(Error::InvalidQuery(format!(
                "{:?} has no searchable terms",
                request.text
            )));
        }
        let constraints = &request.constraints;
        constraints.validate()?;

        let (routing, selected) = match &request.target_db {
            Some(target) => {
                let index = self.collections.get(target)?;
                let only = RankedCollection {
                    collection: index.id().clone(),
                    belief: 0.0,
                    utility: 0.0,
                    rank: 1,
                };
                (Routing::Bypass, vec![only])
            }
            None => (
                Routing::Directory,
                self.directory.select(&terms, constraints)?,
            ),
        };

        let mut record = QueryRecord {
            seq: 0,
            query: request.text.clone(),
            terms: terms.iter().map(|t| t.to_string()).collect(),
            routing,
            selected: selected.iter().map(|r| r.collection.clone()).collect(),
            hits: 0,
            outcome: Outcome::Ok,
            service_quality: request.service_quality.clone(),
        };
        if selected.is_empty() {
            record.outcome = Outcome::NoEligibleDatabase;
            self.log.append(record)?;
            return Err(Error::NoEligibleDatabase);
        }

        let per_collection = selected
            .par_iter()
            .map(|r| {
                self.collections
                    .search(r.collection.as_str(), &terms, constraints.max_results)
                    .map(|hits| (r.collection.clone(), hits))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut hits = merge_results(per_collection, &selected);
        hits.truncate(constraints.max_results);

        record.hits = hits.len();
        self.log.append(record)?;

        Ok(QueryResponse {
            query: request.text.clone(),
            per_collection_frequency: self.directory.frequency_report(&terms),
            terms: terms.into_iter().collect(),
            routing,
            selected,
            hits,
            timing_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawDocument;
    use crate::stemmer::stem_str;

    fn id(s: &str) -> CollectionId {
        CollectionId::new(s).unwrap()
    }

    fn hit(url: &str, score: u64) -> SearchHit {
        SearchHit {
            url: url.into(),
            matched_terms: [stem_str("term").unwrap()].into(),
            score,
        }
    }

    fn ranked(name: &str, belief: f64) -> RankedCollection {
        RankedCollection {
            collection: id(name),
            belief,
            utility: 0.0,
            rank: 1,
        }
    }

    fn urls(merged: &[SourcedHit]) -> Vec<(&str, &str, u64)> {
        merged
            .iter()
            .map(|h| (h.hit.url.as_str(), h.source.as_str(), h.hit.score))
            .collect()
    }

    #[test]
    fn merge_single_collection_is_identity() {
        let hits = vec![hit("http://c", 5), hit("http://a", 2), hit("http://b", 2)];
        let merged = merge_results(vec![(id("DB1"), hits.clone())], &[ranked("DB1", 0.5)]);
        let got: Vec<_> = merged.into_iter().map(|h| h.hit).collect();
        assert_eq!(got, hits);
    }

    #[test]
    fn merge_ties_prefer_higher_belief_source() {
        let merged = merge_results(
            vec![
                (id("DB2"), vec![hit("http://a", 5)]),
                (id("DB1"), vec![hit("http://b", 5)]),
            ],
            &[ranked("DB1", 0.7), ranked("DB2", 0.5)],
        );
        assert_eq!(
            urls(&merged),
            [("http://b", "DB1", 5), ("http://a", "DB2", 5)]
        );
    }

    #[test]
    fn merge_dedups_by_url_keeping_best_score() {
        let merged = merge_results(
            vec![
                (id("DB1"), vec![hit("http://same", 2), hit("http://x", 1)]),
                (id("DB2"), vec![hit("http://same", 4)]),
            ],
            &[ranked("DB1", 0.7), ranked("DB2", 0.5)],
        );
        assert_eq!(
            urls(&merged),
            [("http://same", "DB2", 4), ("http://x", "DB1", 1)]
        );
    }

    fn engine() -> Engine {
        let mut set = CollectionSet::new();
        let corpora = [
            (
                "DB1",
                &["education school", "education teacher", "river"][..],
            ),
            ("DB2", &["river bank", "river delta", "bank"][..]),
            ("DB3", &["education", "mountain"][..]),
        ];
        for (name, bodies) in corpora {
            set.create(id(name));
            for (i, body) in bodies.iter().enumerate() {
                set.ingest_document(name, &RawDocument::new(format!("http://{name}/{i}"), *body))
                    .unwrap();
            }
        }
        Engine::build(set, &BTreeMap::new(), CoriParams::default()).unwrap()
    }

    #[test]
    fn routes_to_best_collection() {
        let e = engine();
        let resp = e.handle_query(&QueryRequest::new("Education")).unwrap();
        assert_eq!(resp.routing, Routing::Directory);
        assert_eq!(resp.selected.len(), 1);
        assert_eq!(resp.selected[0].collection.as_str(), "DB1");
        assert!(resp.hits.iter().all(|h| h.source.as_str() == "DB1"));
        assert_eq!(resp.hits.len(), 2);
        assert_eq!(resp.per_collection_frequency[0].collection.as_str(), "DB1");
        assert_eq!(resp.per_collection_frequency.len(), 3);
    }

    #[test]
    fn conflated_query_has_one_term() {
        let resp = engine()
            .handle_query(&QueryRequest::new("connected connection"))
            .unwrap();
        assert_eq!(resp.terms, vec![stem_str("connect").unwrap()]);
    }

    #[test]
    fn unknown_term_ties_at_default_belief() {
        let e = engine();
        let req = QueryRequest::new("zzzqx").with_constraints(UtilityConstraints {
            num_databases: 3,
            ..Default::default()
        });
        let resp = e.handle_query(&req).unwrap();
        assert!(resp.hits.is_empty());
        let names: Vec<_> = resp
            .selected
            .iter()
            .map(|r| r.collection.as_str())
            .collect();
        assert_eq!(names, ["DB1", "DB2", "DB3"]);
        assert!(resp.selected.iter().all(|r| r.belief == 0.4));
    }

    #[test]
    fn target_db_bypasses_selection() {
        let e = engine();
        let resp = e
            .handle_query(&QueryRequest::new("education").with_target("DB3"))
            .unwrap();
        assert_eq!(resp.routing, Routing::Bypass);
        assert_eq!(resp.selected.len(), 1);
        assert_eq!(resp.selected[0].collection.as_str(), "DB3");
        assert_eq!(resp.hits[0].source.as_str(), "DB3");
        assert_eq!(e.log().records()[0].routing, Routing::Bypass);
    }

    #[test]
    fn query_errors() {
        let e = engine();
        assert!(matches!(
            e.handle_query(&QueryRequest::new("the of and")),
            Err(Error::InvalidQuery(_))
        ));
        assert!(matches!(
            e.handle_query(&QueryRequest::new("education").with_target("DB9")),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn no_eligible_database_is_an_error_and_logged() {
        let mut costs = BTreeMap::new();
        for n in ["DB1", "DB2", "DB3"] {
            costs.insert(
                id(n),
                CostEstimate {
                    est_latency_ms: 100,
                    price: 0.0,
                },
            );
        }
        let e = Engine::build(engine().collections.clone(), &costs, CoriParams::default()).unwrap();
        let req = QueryRequest::new("river").with_constraints(UtilityConstraints {
            ttl_ms: 10,
            ..Default::default()
        });
        assert!(matches!(
            e.handle_query(&req),
            Err(Error::NoEligibleDatabase)
        ));
        assert_eq!(e.log().records()[0].outcome, Outcome::NoEligibleDatabase);
    }

    #[test]
    fn hits_truncated_to_max_results() {
        let e = engine();
        let req = QueryRequest::new("river education").with_constraints(UtilityConstraints {
            max_results: 2,
            num_databases: 3,
            ..Default::default()
        });
        let resp = e.handle_query(&req).unwrap();
        assert_eq!(resp.hits.len(), 2);
    }

    #[test]
    fn from_index_rejects_mismatched_corpora() {
        let e = engine();
        let mut other = e.collections().clone();
        other
            .ingest_document("DB1", &RawDocument::new("http://DB1/new", "extra"))
            .unwrap();
        assert!(matches!(
            Engine::from_index(e.directory().clone(), other),
            Err(Error::CorruptIndex(_))
        ));
        assert!(Engine::from_index(e.directory().clone(), e.collections().clone()).is_ok());
    }
}
