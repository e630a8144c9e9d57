//! Service directory: collection statistics, CORI scoring, utility ranking
//! and the persisted directory index.

mod activity;
mod cori;
mod matrix;
mod persist;
mod utility;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use activity::{
    read_log, summarize, ActivityLog, ActivitySummary, Outcome, QueryCounts, QueryRecord, Routing,
};
pub use cori::{
    belief, belief_from_stats, icf, icf_with, score_query, weighted_df, weighted_df_with,
    BeliefScore, CoriParams, MissingTermPolicy,
};
pub use matrix::{CollectionStats, DfMatrix};
pub use persist::{load_index, parse_index_str, save_index, to_index_string};
pub use utility::{
    utility_rank, CollectionProfile, RankedCollection, UtilityConstraints, UtilityWeights,
};

use crate::error::Result;
use crate::index::{CollectionId, CollectionSet};
use crate::stemmer::Stem;

/// Summed document frequency of the query terms in one collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionFrequency {
    pub collection: CollectionId,
    pub frequency: u64,
}

/// Cost model for a collection before any profile is configured.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostEstimate {
    pub est_latency_ms: u64,
    pub price: f64,
}

/// Immutable directory state: the df matrix, per-collection cost profiles
/// and the CORI constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Directory {
    matrix: DfMatrix,
    profiles: BTreeMap<CollectionId, CollectionProfile>,
    params: CoriParams,
}

impl Directory {
    /// Profiles missing from `profiles` default to zero latency and price;
    /// record counts always come from the matrix.
    pub fn new(
        matrix: DfMatrix,
        mut profiles: BTreeMap<CollectionId, CollectionProfile>,
        params: CoriParams,
    ) -> Self {
        profiles.retain(|id, _| matrix.collection(id.as_str()).is_ok());
        for stats in matrix.collections() {
            let profile = profiles
                .entry(stats.id.clone())
                .or_insert_with(|| CollectionProfile {
                    collection: stats.id.clone(),
                    est_latency_ms: 0,
                    price: 0.0,
                    record_count: 0,
                });
            profile.record_count = stats.record_count;
        }
        Directory {
            matrix,
            profiles,
            params,
        }
    }

    /// Builds the directory from ingested collections.
    pub fn configure(
        collections: &CollectionSet,
        costs: &BTreeMap<CollectionId, CostEstimate>,
        params: CoriParams,
    ) -> Result<Self> {
        params.validate()?;
        let matrix = DfMatrix::configure(collections)?;
        let profiles = costs
            .iter()
            .map(|(id, c)| {
                (
                    id.clone(),
                    CollectionProfile {
                        collection: id.clone(),
                        est_latency_ms: c.est_latency_ms,
                        price: c.price,
                        record_count: 0,
                    },
                )
            })
            .collect();
        Ok(Self::new(matrix, profiles, params))
    }

    pub fn matrix(&self) -> &DfMatrix {
        &self.matrix
    }

    pub fn params(&self) -> &CoriParams {
        &self.params
    }

    pub fn profiles(&self) -> &BTreeMap<CollectionId, CollectionProfile> {
        &self.profiles
    }

    pub fn profile(&self, name: &str) -> &CollectionProfile {
        &self.profiles[name]
    }

    pub fn max_owner(&self, term: &Stem) -> Option<(&CollectionId, u64)> {
        self.matrix.max_owner(term)
    }

    pub fn score(&self, terms: &BTreeSet<Stem>) -> Result<Vec<BeliefScore>> {
        score_query(terms, &self.matrix, &self.params)
    }

    /// Both selection steps: CORI scoring, then utility ranking.
    pub fn select(
        &self,
        terms: &BTreeSet<Stem>,
        constraints: &UtilityConstraints,
    ) -> Result<Vec<RankedCollection>> {
        let scores = self.score(terms)?;
        utility_rank(&scores, &self.profiles, constraints)
    }

    /// Per-collection summed df of `terms`, most frequent first, ties by name.
    pub fn frequency_report(&self, terms: &BTreeSet<Stem>) -> Vec<CollectionFrequency> {
        let mut report: Vec<CollectionFrequency> = self
            .matrix
            .collections()
            .iter()
            .map(|c| CollectionFrequency {
                collection: c.id.clone(),
                frequency: terms.iter().map(|t| self.matrix.df(t, c.id.as_str())).sum(),
            })
            .collect();
        report.sort_by(|a, b| {
            b.frequency
                .cmp(&a.frequency)
                .then_with(|| a.collection.cmp(&b.collection))
        });
        report
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_index(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_index(path)
    }
}
