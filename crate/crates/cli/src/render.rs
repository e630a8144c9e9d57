//! Text and JSON-lines renderings of query responses and log summaries.

use std::fmt::Write;

use fedsel_core::broker::QueryResponse;
use fedsel_core::directory::{ActivitySummary, CollectionFrequency, Routing};
use serde_json::json;

fn frequency_table(out: &mut String, freq: &[CollectionFrequency]) {
    let _ = writeln!(out, "keyword frequency:");
    let _ = writeln!(out, "  {:<12} {:>9}", "collection", "frequency");
    for f in freq {
        let _ = writeln!(out, "  {:<12} {:>9}", f.collection.as_str(), f.frequency);
    }
}

pub fn response_table(r: &QueryResponse) -> String {
    let mut out = String::new();
    let terms: Vec<&str> = r.terms.iter().map(|t| t.as_str()).collect();
    let _ = writeln!(out, "query: {}", r.query);
    let _ = writeln!(out, "terms: {}", terms.join(" "));
    match r.routing {
        Routing::Directory => {
            let _ = writeln!(out, "routing: directory");
        }
        Routing::Bypass => {
            let _ = writeln!(
                out,
                "routing: bypass (target collection given, selection skipped)"
            );
        }
    }
    let _ = writeln!(out, "selected:");
    let _ = writeln!(
        out,
        "  {:>4} {:<12} {:>10} {:>10}",
        "rank", "collection", "belief", "utility"
    );
    for s in &r.selected {
        let _ = writeln!(
            out,
            "  {:>4} {:<12} {:>10.6} {:>10.6}",
            s.rank,
            s.collection.as_str(),
            s.belief,
            s.utility
        );
    }
    let _ = writeln!(out, "hits: {}", r.hits.len());
    for (i, h) in r.hits.iter().enumerate() {
        let matched: Vec<&str> = h.hit.matched_terms.iter().map(|t| t.as_str()).collect();
        let _ = writeln!(
            out,
            "  {:>3} {:>5} {:<8} {} [{}]",
            i + 1,
            h.hit.score,
            h.source.as_str(),
            h.hit.url,
            matched.join(" ")
        );
    }
    frequency_table(&mut out, &r.per_collection_frequency);
    out
}

/// One JSON object per line; every line has a `record` kind.
pub fn response_records(r: &QueryResponse) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}",
        json!({"record": "query", "query": r.query, "terms": r.terms, "routing": r.routing,
               "timing_ms": r.timing_ms})
    );
    for s in &r.selected {
        let _ = writeln!(
            out,
            "{}",
            json!({"record": "selected", "rank": s.rank, "collection": s.collection,
                   "belief": s.belief, "utility": s.utility})
        );
    }
    for (i, h) in r.hits.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}",
            json!({"record": "hit", "rank": i + 1, "url": h.hit.url, "source": h.source,
                   "score": h.hit.score, "matched_terms": h.hit.matched_terms})
        );
    }
    for f in &r.per_collection_frequency {
        let _ = writeln!(
            out,
            "{}",
            json!({"record": "frequency", "collection": f.collection, "frequency": f.frequency})
        );
    }
    out
}

const NO_ELIGIBLE: &str = "no collection satisfies the latency and price limits";

pub fn no_eligible_table(query: &str, freq: &[CollectionFrequency]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "query: {query}");
    let _ = writeln!(out, "advisory: {NO_ELIGIBLE}");
    let _ = writeln!(out, "hits: 0");
    frequency_table(&mut out, freq);
    out
}

pub fn no_eligible_records(query: &str, freq: &[CollectionFrequency]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}",
        json!({"record": "query", "query": query, "advisory": NO_ELIGIBLE})
    );
    for f in freq {
        let _ = writeln!(
            out,
            "{}",
            json!({"record": "frequency", "collection": f.collection, "frequency": f.frequency})
        );
    }
    out
}

pub fn summary_table(s: &ActivitySummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5} {:>6} {:>12} {:>6}",
        "seq", "terms", "collections", "hits"
    );
    for q in &s.queries {
        let _ = writeln!(
            out,
            "{:>5} {:>6} {:>12} {:>6}",
            q.seq, q.terms, q.collections_selected, q.hits
        );
    }
    let _ = writeln!(
        out,
        "queries={} hits={} bypassed={} no_eligible={}",
        s.queries.len(),
        s.total_hits,
        s.bypassed,
        s.no_eligible
    );
    out
}
