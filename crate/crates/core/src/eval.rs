//! Experiment harness: seeded topic-partitioned corpora and a comparison of
//! selective routing against exhaustive search over every collection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::broker::{query_terms, Engine, QueryRequest, QueryResponse};
use crate::corpus::{self, RawDocument};
use crate::directory::{CollectionFrequency, CoriParams, UtilityConstraints};
use crate::error::{Error, Result};
use crate::index::{CollectionId, CollectionSet};
use crate::stemmer::{self, Stem};

/// Built-in topic vocabularies. Stems are pairwise disjoint across topics
/// and with [`BACKGROUND`].
pub const TOPIC_LEXICON: &[(&str, &[&str])] = &[
    (
        "education",
        &[
            "education",
            "school",
            "teacher",
            "student",
            "curriculum",
            "classroom",
            "lecture",
            "university",
            "exam",
            "homework",
            "tutor",
            "diploma",
            "pedagogy",
            "literacy",
            "syllabus",
            "campus",
            "scholarship",
            "textbook",
            "kindergarten",
            "semester",
            "professor",
            "enrollment",
            "graduate",
            "lesson",
        ],
    ),
    (
        "health",
        &[
            "health",
            "medicine",
            "doctor",
            "patient",
            "hospital",
            "clinic",
            "vaccine",
            "nurse",
            "disease",
            "therapy",
            "diagnosis",
            "surgery",
            "symptom",
            "nutrition",
            "cardiology",
            "pharmacy",
            "infection",
            "wellness",
            "physician",
            "immunity",
            "diabetes",
            "allergy",
            "prescription",
            "pediatric",
        ],
    ),
    (
        "sports",
        &[
            "football",
            "soccer",
            "basketball",
            "tennis",
            "athlete",
            "stadium",
            "tournament",
            "referee",
            "goalkeeper",
            "marathon",
            "olympic",
            "coach",
            "league",
            "championship",
            "cricket",
            "hockey",
            "baseball",
            "sprinter",
            "playoff",
            "volleyball",
            "golf",
            "rugby",
            "swimmer",
            "racket",
        ],
    ),
    (
        "finance",
        &[
            "finance",
            "bank",
            "investment",
            "stock",
            "bond",
            "dividend",
            "portfolio",
            "loan",
            "mortgage",
            "interest",
            "equity",
            "budget",
            "currency",
            "inflation",
            "credit",
            "asset",
            "audit",
            "revenue",
            "taxation",
            "insurance",
            "pension",
            "capital",
            "liquidity",
            "brokerage",
        ],
    ),
    (
        "travel",
        &[
            "travel",
            "tourism",
            "airline",
            "passport",
            "hotel",
            "luggage",
            "itinerary",
            "cruise",
            "voyage",
            "destination",
            "airport",
            "backpacker",
            "sightseeing",
            "hostel",
            "visa",
            "excursion",
            "resort",
            "journey",
            "ticket",
            "tourist",
            "guidebook",
            "souvenir",
            "safari",
            "camping",
        ],
    ),
];

/// Generic web-page words shared by every collection.
pub const BACKGROUND: &[&str] = &[
    "page",
    "information",
    "website",
    "online",
    "contact",
    "service",
    "news",
    "update",
    "link",
    "home",
    "article",
    "people",
    "time",
    "world",
    "year",
    "day",
    "group",
    "public",
    "local",
    "community",
    "system",
    "program",
    "welcome",
    "privacy",
];

/// Number of words per synthesized vocabulary for topics not in the lexicon.
const SYNTHETIC_VOCABULARY: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionSpec {
    pub name: CollectionId,
    pub record_count: usize,
    pub topic: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub text: String,
    /// Topic whose collection should be selected; `None` for queries with
    /// no owner (e.g. background words only).
    pub topic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub collections: Vec<CollectionSpec>,
    pub vocabulary_seed: u64,
    pub queries: Vec<QuerySpec>,
    /// Fraction of each document's tokens drawn from [`BACKGROUND`].
    pub noise_fraction: f64,
    /// Inclusive range of body lengths in tokens.
    pub body_tokens: (usize, usize),
}

impl ExperimentSpec {
    /// Five collections at the record counts of the reference setup, one
    /// topic each, four topic queries per topic and two background-only
    /// queries.
    pub fn five_topics(seed: u64) -> Self {
        let counts = [119, 105, 81, 108, 125];
        let collections: Vec<CollectionSpec> = TOPIC_LEXICON
            .iter()
            .zip(counts)
            .enumerate()
            .map(|(i, ((topic, _), record_count))| CollectionSpec {
                name: CollectionId::new(format!("DB{}", i + 1)).expect("valid name"),
                record_count,
                topic: topic.to_string(),
            })
            .collect();
        let mut queries = Vec::new();
        for (topic, words) in TOPIC_LEXICON {
            for word in &words[..4] {
                queries.push(QuerySpec {
                    text: word.to_string(),
                    topic: Some(topic.to_string()),
                });
            }
        }
        for text in ["online information", "community news"] {
            queries.push(QuerySpec {
                text: text.into(),
                topic: None,
            });
        }
        ExperimentSpec {
            collections,
            vocabulary_seed: seed,
            queries,
            noise_fraction: 0.2,
            body_tokens: (30, 60),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        let mut topics = BTreeSet::new();
        for c in &self.collections {
            if !names.insert(&c.name) {
                return Err(Error::InvalidArgument(format!(
                    "collection {} repeated",
                    c.name
                )));
            }
            if !topics.insert(&c.topic) {
                return Err(Error::InvalidArgument(format!(
                    "topic {} repeated",
                    c.topic
                )));
            }
        }
        for q in &self.queries {
            if let Some(t) = &q.topic {
                if !topics.contains(t) {
                    return Err(Error::InvalidArgument(format!(
                        "query topic {t} has no collection"
                    )));
                }
            }
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(Error::InvalidArgument(
                "noise_fraction outside [0, 1)".into(),
            ));
        }
        let (lo, hi) = self.body_tokens;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidArgument("bad body_tokens range".into()));
        }
        Ok(())
    }
}

/// Corpus files written by [`build_experiment`] and the ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentLayout {
    pub corpora: Vec<(CollectionId, PathBuf)>,
    pub owners: BTreeMap<String, CollectionId>,
}

fn stems_of(words: &[String]) -> BTreeSet<Stem> {
    words.iter().flat_map(|w| query_terms(w)).collect()
}

/// Vocabulary per topic: lexicon words when available, otherwise seeded
/// pseudo-words whose stems collide with nothing else.
pub fn topic_vocabularies(spec: &ExperimentSpec) -> BTreeMap<String, Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.vocabulary_seed);
    let background: Vec<String> = BACKGROUND.iter().map(|w| w.to_string()).collect();
    let mut taken = stems_of(&background);
    let mut vocabularies = BTreeMap::new();
    let lexicon: BTreeMap<&str, &[&str]> = TOPIC_LEXICON.iter().copied().collect();
    for c in &spec.collections {
        if let Some(words) = lexicon.get(c.topic.as_str()) {
            let words: Vec<String> = words.iter().map(|w| w.to_string()).collect();
            taken.extend(stems_of(&words));
            vocabularies.insert(c.topic.clone(), words);
        }
    }
    for c in &spec.collections {
        if vocabularies.contains_key(&c.topic) {
            continue;
        }
        let mut words = Vec::with_capacity(SYNTHETIC_VOCABULARY);
        while words.len() < SYNTHETIC_VOCABULARY {
            let len = rng.random_range(6..=9);
            let word: String = (0..len)
                .map(|i| {
                    let pool: &[u8] = if i % 2 == 0 {
                        b"bcdfgklmnprstvz"
                    } else {
                        b"aeiou"
                    };
                    pool[rng.random_range(0..pool.len())] as char
                })
                .collect();
            let Ok(stem) = stemmer::stem_str(&word) else {
                continue;
            };
            if corpus::is_stopword(&word) || !taken.insert(stem) {
                continue;
            }
            words.push(word);
        }
        vocabularies.insert(c.topic.clone(), words);
    }
    vocabularies
}

fn generate_documents(
    spec: &ExperimentSpec,
    collection: &CollectionSpec,
    vocabulary: &[String],
    rng: &mut ChaCha8Rng,
) -> Vec<RawDocument> {
    let slug = collection.name.as_str().to_ascii_lowercase();
    let n = vocabulary.len();
    (0..collection.record_count)
        .map(|i| {
            let len = rng.random_range(spec.body_tokens.0..=spec.body_tokens.1);
            let noise = (len as f64 * spec.noise_fraction).round() as usize;
            let mut tokens: Vec<&str> = Vec::with_capacity(len);
            for _ in 0..len - noise {
                tokens.push(&vocabulary[rng.random_range(0..n)]);
            }
            for _ in 0..noise {
                tokens.push(BACKGROUND[rng.random_range(0..BACKGROUND.len())]);
            }
            tokens.shuffle(rng);
            // Titles cycle through the vocabulary so every topic word occurs.
            let title = format!("{} {}", vocabulary[i % n], vocabulary[(i * 7 + 3) % n]);
            RawDocument {
                url: format!(
                    "http://{slug}.example.org/{}/{:04}",
                    collection.topic,
                    i + 1
                ),
                title: Some(title),
                body: Some(tokens.join(" ")),
                topic: Some(collection.topic.clone()),
            }
        })
        .collect()
}

/// Writes one corpus file per collection into `dir`. Same spec, same bytes.
pub fn build_experiment(spec: &ExperimentSpec, dir: &Path) -> Result<ExperimentLayout> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let vocabularies = topic_vocabularies(spec);
    let mut corpora = Vec::new();
    let mut owners = BTreeMap::new();
    for (i, c) in spec.collections.iter().enumerate() {
        // Independent stream per collection so adding one leaves the others unchanged.
        let mut rng = ChaCha8Rng::seed_from_u64(spec.vocabulary_seed.wrapping_add(1 + i as u64));
        let docs = generate_documents(spec, c, &vocabularies[&c.topic], &mut rng);
        let path = dir.join(format!("{}.jsonl", c.name));
        corpus::write_corpus(&path, &docs)?;
        corpora.push((c.name.clone(), path));
        owners.insert(c.topic.clone(), c.name.clone());
    }
    Ok(ExperimentLayout { corpora, owners })
}

/// Which collection a query is expected to be routed to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expected {
    Owner(CollectionId),
    /// The source collection of the exhaustive baseline's top hit.
    Baseline,
    /// No owner: agreement is not scored.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub text: String,
    pub expected: Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEvaluation {
    pub query: String,
    pub selected: Option<CollectionId>,
    pub expected: Option<CollectionId>,
    /// `None` when the query has no expected collection.
    pub agreement: Option<bool>,
    /// Selective and exhaustive top hits are the same document; `None`
    /// when the exhaustive baseline finds nothing.
    pub top_document_agreement: Option<bool>,
    pub collections_searched: usize,
    pub overlap_at_10: Option<f64>,
    pub frequency: Vec<CollectionFrequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalAggregate {
    pub queries: usize,
    /// Queries with an expected collection; agreement rates are over these.
    pub scored_queries: usize,
    pub top1_agreement: Option<f64>,
    pub top_document_agreement: Option<f64>,
    pub mean_overlap_at_10: Option<f64>,
    pub collections: usize,
    pub mean_collections_searched: f64,
    pub reduction_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_query: Vec<QueryEvaluation>,
    pub aggregate: EvalAggregate,
}

fn fraction(flags: impl Iterator<Item = bool>) -> Option<f64> {
    let (hits, n) = flags.fold((0usize, 0usize), |(h, n), f| (h + usize::from(f), n + 1));
    (n > 0).then(|| hits as f64 / n as f64)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn overlap_at_10(selective: &QueryResponse, exhaustive: &QueryResponse) -> Option<f64> {
    let baseline: BTreeSet<&str> = exhaustive
        .hits
        .iter()
        .take(10)
        .map(|h| h.hit.url.as_str())
        .collect();
    if baseline.is_empty() {
        return None;
    }
    let shared = selective
        .hits
        .iter()
        .take(10)
        .filter(|h| baseline.contains(h.hit.url.as_str()))
        .count();
    Some(shared as f64 / baseline.len() as f64)
}

/// Runs every query twice, routed by `constraints` and exhaustively over all
/// collections, and compares the two.
pub fn evaluate(
    engine: &Engine,
    queries: &[EvalQuery],
    constraints: &UtilityConstraints,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::InvalidArgument("no queries to evaluate".into()));
    }
    let collections = engine.collections().len();
    let exhaustive_constraints = UtilityConstraints {
        num_databases: collections,
        ttl_ms: 0,
        max_price: None,
        ..*constraints
    };
    let mut per_query = Vec::with_capacity(queries.len());
    for q in queries {
        let selective =
            engine.handle_query(&QueryRequest::new(&q.text).with_constraints(*constraints))?;
        let exhaustive = engine
            .handle_query(&QueryRequest::new(&q.text).with_constraints(exhaustive_constraints))?;
        let selected = selective.selected.first().map(|r| r.collection.clone());
        let expected = match &q.expected {
            Expected::Owner(id) => Some(id.clone()),
            Expected::Baseline => exhaustive.hits.first().map(|h| h.source.clone()),
            Expected::Undefined => None,
        };
        let agreement = expected.as_ref().map(|e| selected.as_ref() == Some(e));
        let top_document_agreement = exhaustive.hits.first().map(|top| {
            selective
                .hits
                .first()
                .is_some_and(|h| h.hit.url == top.hit.url && h.source == top.source)
        });
        per_query.push(QueryEvaluation {
            query: q.text.clone(),
            overlap_at_10: overlap_at_10(&selective, &exhaustive),
            selected,
            expected,
            agreement,
            top_document_agreement,
            collections_searched: selective.selected.len(),
            frequency: selective.per_collection_frequency,
        });
    }
    let mean_searched =
        mean(per_query.iter().map(|q| q.collections_searched as f64)).unwrap_or(0.0);
    let aggregate = EvalAggregate {
        queries: per_query.len(),
        scored_queries: per_query.iter().filter(|q| q.agreement.is_some()).count(),
        top1_agreement: fraction(per_query.iter().filter_map(|q| q.agreement)),
        top_document_agreement: fraction(
            per_query
                .iter()
                .filter(|q| q.agreement.is_some())
                .filter_map(|q| q.top_document_agreement),
        ),
        mean_overlap_at_10: mean(per_query.iter().filter_map(|q| q.overlap_at_10)),
        collections,
        mean_collections_searched: mean_searched,
        reduction_factor: collections as f64 / mean_searched,
    };
    Ok(EvalReport {
        per_query,
        aggregate,
    })
}

/// Ingests a built experiment into a configured engine with zero-cost profiles.
pub fn load_experiment(layout: &ExperimentLayout, params: CoriParams) -> Result<Engine> {
    let mut set = CollectionSet::new();
    for (id, path) in &layout.corpora {
        set.load_corpus(path, id)?;
    }
    Engine::build(set, &BTreeMap::new(), params)
}

/// Ingest, configure, and evaluate the experiment's queries against ground truth.
pub fn run_experiment(
    spec: &ExperimentSpec,
    layout: &ExperimentLayout,
    params: CoriParams,
    constraints: &UtilityConstraints,
) -> Result<EvalReport> {
    let engine = load_experiment(layout, params)?;
    let queries: Vec<EvalQuery> = spec
        .queries
        .iter()
        .map(|q| EvalQuery {
            text: q.text.clone(),
            expected: match &q.topic {
                Some(t) => Expected::Owner(layout.owners[t].clone()),
                None => Expected::Undefined,
            },
        })
        .collect();
    evaluate(&engine, &queries, constraints)
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Human-readable per-query table followed by the aggregate line.
    pub fn render_table(&self) -> String {
        let flag = |f: Option<bool>| match f {
            Some(true) => "yes",
            Some(false) => "NO",
            None => "-",
        };
        let name = |c: &Option<CollectionId>| c.as_ref().map_or("-".to_string(), |c| c.to_string());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:<10} {:<10} {:<6} {:<6} frequency",
            "query", "selected", "expected", "agree", "top1"
        );
        for q in &self.per_query {
            let freq: Vec<String> = q
                .frequency
                .iter()
                .map(|f| format!("{}={}", f.collection, f.frequency))
                .collect();
            let _ = writeln!(
                out,
                "{:<28} {:<10} {:<10} {:<6} {:<6} {}",
                q.query,
                name(&q.selected),
                name(&q.expected),
                flag(q.agreement),
                flag(q.top_document_agreement),
                freq.join(" ")
            );
        }
        let a = &self.aggregate;
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.1}%", v * 100.0));
        let _ = writeln!(
            out,
            "queries={} scored={} top1_agreement={} top_document_agreement={} overlap@10={} \
             collections_searched={:.2}/{} reduction={:.2}x",
            a.queries,
            a.scored_queries,
            pct(a.top1_agreement),
            pct(a.top_document_agreement),
            pct(a.mean_overlap_at_10),
            a.mean_collections_searched,
            a.collections,
            a.reduction_factor
        );
        out
    }
}
