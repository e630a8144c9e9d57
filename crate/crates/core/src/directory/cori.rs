//! CORI inference-network collection scoring.
//!
//! For term `t` and collection `c`:
//!
//! ```text
//! icf(t)      = log((|C| + 0.5) / cf(t)) / log(|C| + 1.0)
//! df_hat(t,c) = d_t + (1 - d_t) * log(df(t,c) + 0.5) / log(df_max(c) + 1.0)
//! p(t|c)      = d_b + (1 - d_b) * df_hat(t,c) * icf(t)
//! ```
//!
//! A query's belief in a collection is the arithmetic mean of `p(t|c)` over
//! its distinct terms.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::matrix::DfMatrix;
use crate::error::{Error, Result};
use crate::index::CollectionId;
use crate::stemmer::Stem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingTermPolicy {
    /// A term absent from a collection contributes exactly `d_b`.
    #[default]
    DefaultBelief,
    /// Evaluate the formula literally at `df = 0`.
    FormulaWithZeroDf,
}

impl MissingTermPolicy {
    pub fn name(self) -> &'static str {
        match self {
            MissingTermPolicy::DefaultBelief => "default_belief",
            MissingTermPolicy::FormulaWithZeroDf => "formula_with_zero_df",
        }
    }
}

impl fmt::Display for MissingTermPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MissingTermPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default_belief" => Ok(MissingTermPolicy::DefaultBelief),
            "formula_with_zero_df" => Ok(MissingTermPolicy::FormulaWithZeroDf),
            other => Err(Error::InvalidArgument(format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoriParams {
    pub d_t: f64,
    pub d_b: f64,
    pub missing_term_policy: MissingTermPolicy,
}

impl Default for CoriParams {
    fn default() -> Self {
        CoriParams {
            d_t: 0.4,
            d_b: 0.4,
            missing_term_policy: MissingTermPolicy::DefaultBelief,
        }
    }
}

impl CoriParams {
    pub fn new(d_t: f64, d_b: f64, missing_term_policy: MissingTermPolicy) -> Result<Self> {
        let params = CoriParams {
            d_t,
            d_b,
            missing_term_policy,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("d_t", self.d_t), ("d_b", self.d_b)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} outside [0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Inverse collection frequency under an arbitrary logarithm.
/// `None` when the term occurs nowhere (`cf = 0`).
pub fn icf_with(log: impl Fn(f64) -> f64, collections: usize, cf: usize) -> Option<f64> {
    if cf == 0 {
        return None;
    }
    let c = collections as f64;
    Some(log((c + 0.5) / cf as f64) / log(c + 1.0))
}

pub fn icf(collections: usize, cf: usize) -> Option<f64> {
    icf_with(f64::ln, collections, cf)
}

/// Weighted document frequency. `None` for an empty collection (`df_max = 0`).
pub fn weighted_df_with(log: impl Fn(f64) -> f64, df: u64, df_max: u64, d_t: f64) -> Option<f64> {
    if df_max == 0 {
        return None;
    }
    Some(d_t + (1.0 - d_t) * log(df as f64 + 0.5) / log(df_max as f64 + 1.0))
}

pub fn weighted_df(df: u64, df_max: u64, d_t: f64) -> Option<f64> {
    weighted_df_with(f64::ln, df, df_max, d_t)
}

/// `p(t|c)` from raw statistics, applying the missing-term policy.
/// `None` when the collection is empty and so excluded from scoring.
pub fn belief_from_stats(
    df: u64,
    df_max: u64,
    collections: usize,
    cf: usize,
    params: &CoriParams,
) -> Option<f64> {
    if df_max == 0 {
        return None;
    }
    let Some(icf) = icf(collections, cf) else {
        return Some(params.d_b);
    };
    if df == 0 && params.missing_term_policy == MissingTermPolicy::DefaultBelief {
        return Some(params.d_b);
    }
    let df_hat = weighted_df(df, df_max, params.d_t)?;
    Some(params.d_b + (1.0 - params.d_b) * df_hat * icf)
}

/// `p(term|collection)` over a configured matrix. `Ok(None)` signals an
/// excluded (empty) collection.
pub fn belief(
    term: &Stem,
    collection: &str,
    matrix: &DfMatrix,
    params: &CoriParams,
) -> Result<Option<f64>> {
    let stats = matrix.collection(collection)?;
    Ok(belief_from_stats(
        matrix.df(term, collection),
        stats.df_max,
        matrix.size(),
        matrix.cf(term),
        params,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefScore {
    pub collection: CollectionId,
    pub belief: f64,
    pub per_term: BTreeMap<Stem, f64>,
    /// True for empty collections, which are ranked last at `d_b`.
    pub excluded: bool,
}

/// Scores every collection for a query. Non-empty collections are sorted by
/// belief descending then name; empty collections follow at `d_b`.
pub fn score_query(
    terms: &BTreeSet<Stem>,
    matrix: &DfMatrix,
    params: &CoriParams,
) -> Result<Vec<BeliefScore>> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument("empty term set".into()));
    }
    let mut scored = Vec::new();
    let mut excluded = Vec::new();
    for stats in matrix.collections() {
        let name = stats.id.as_str();
        let per_term: Option<BTreeMap<Stem, f64>> = terms
            .iter()
            .map(|t| belief(t, name, matrix, params).map(|p| p.map(|p| (t.clone(), p))))
            .collect::<Result<Option<_>>>()?;
        match per_term {
            Some(per_term) => {
                let belief = per_term.values().sum::<f64>() / per_term.len() as f64;
                scored.push(BeliefScore {
                    collection: stats.id.clone(),
                    belief,
                    per_term,
                    excluded: false,
                });
            }
            None => excluded.push(BeliefScore {
                collection: stats.id.clone(),
                belief: params.d_b,
                per_term: terms.iter().map(|t| (t.clone(), params.d_b)).collect(),
                excluded: true,
            }),
        }
    }
    scored.sort_by(|a, b| {
        b.belief
            .partial_cmp(&a.belief)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.collection.cmp(&b.collection))
    });
    scored.extend(excluded);
    Ok(scored)
}
