use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{CollectionId, CollectionSet};
use crate::stemmer::Stem;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub id: CollectionId,
    pub record_count: u64,
    pub df_max: u64,
}

/// Document-frequency matrix over every (term, collection) pair with
/// `df >= 1`, plus the derived per-term collection frequency and the
/// per-term max-frequency owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfMatrix {
    collections: Vec<CollectionStats>,
    df: BTreeMap<Stem, BTreeMap<CollectionId, u64>>,
    max_owner: BTreeMap<Stem, (CollectionId, u64)>,
}

impl DfMatrix {
    /// Builds the matrix from fully ingested collections. Reconfiguring means
    /// building a fresh matrix and replacing the old one.
    pub fn configure(collections: &CollectionSet) -> Result<Self> {
        if collections.is_empty() {
            return Err(Error::InvalidState("no collections to configure".into()));
        }
        let mut stats = Vec::with_capacity(collections.len());
        let mut df: BTreeMap<Stem, BTreeMap<CollectionId, u64>> = BTreeMap::new();
        for index in collections.iter() {
            stats.push(CollectionStats {
                id: index.id().clone(),
                record_count: index.record_count(),
                df_max: index.max_df(),
            });
            for (term, count) in index.term_dfs() {
                df.entry(term.clone())
                    .or_default()
                    .insert(index.id().clone(), count);
            }
        }
        Ok(Self::assemble(stats, df))
    }

    /// Rebuilds a matrix from persisted parts, checking every derived value.
    pub fn from_parts(
        mut collections: Vec<CollectionStats>,
        entries: impl IntoIterator<Item = (Stem, CollectionId, u64)>,
    ) -> Result<Self> {
        if collections.is_empty() {
            return Err(Error::CorruptIndex("no collections".into()));
        }
        collections.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = collections.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::CorruptIndex(format!(
                "collection {} listed twice",
                w[0].id
            )));
        }
        let record_counts: BTreeMap<CollectionId, u64> = collections
            .iter()
            .map(|c| (c.id.clone(), c.record_count))
            .collect();
        let mut df: BTreeMap<Stem, BTreeMap<CollectionId, u64>> = BTreeMap::new();
        for (term, collection, count) in entries {
            let Some(&record_count) = record_counts.get(&collection) else {
                return Err(Error::CorruptIndex(format!(
                    "term {term} refers to unknown collection {collection}"
                )));
            };
            if count == 0 || count > record_count {
                return Err(Error::CorruptIndex(format!(
                    "df({term}, {collection}) = {count} outside [1, {record_count}]"
                )));
            }
            if df
                .entry(term.clone())
                .or_default()
                .insert(collection.clone(), count)
                .is_some()
            {
                return Err(Error::CorruptIndex(format!(
                    "df({term}, {collection}) listed twice"
                )));
            }
        }
        for stats in &collections {
            let observed = df
                .values()
                .filter_map(|row| row.get(&stats.id))
                .copied()
                .max()
                .unwrap_or(0);
            if observed != stats.df_max {
                return Err(Error::CorruptIndex(format!(
                    "df_max of {} is {} but its terms give {observed}",
                    stats.id, stats.df_max
                )));
            }
        }
        Ok(Self::assemble(collections, df))
    }

    fn assemble(
        mut collections: Vec<CollectionStats>,
        df: BTreeMap<Stem, BTreeMap<CollectionId, u64>>,
    ) -> Self {
        collections.sort_by(|a, b| a.id.cmp(&b.id));
        let max_owner = df
            .iter()
            .filter_map(|(term, row)| {
                // BTreeMap iterates names ascending, so the first maximum wins ties.
                row.iter()
                    .fold(None::<(&CollectionId, u64)>, |best, (id, &n)| match best {
                        Some((_, b)) if b >= n => best,
                        _ => Some((id, n)),
                    })
                    .map(|(id, n)| (term.clone(), (id.clone(), n)))
            })
            .collect();
        DfMatrix {
            collections,
            df,
            max_owner,
        }
    }

    /// `|C|`, the number of collections including empty ones.
    pub fn size(&self) -> usize {
        self.collections.len()
    }

    pub fn collections(&self) -> &[CollectionStats] {
        &self.collections
    }

    pub fn collection(&self, name: &str) -> Result<&CollectionStats> {
        self.collections
            .binary_search_by(|c| c.id.as_str().cmp(name))
            .map(|i| &self.collections[i])
            .map_err(|_| Error::NotFound(format!("collection {name}")))
    }

    pub fn df(&self, term: &Stem, collection: &str) -> u64 {
        self.df
            .get(term)
            .and_then(|row| row.get(collection))
            .copied()
            .unwrap_or(0)
    }

    pub fn cf(&self, term: &Stem) -> usize {
        self.df.get(term).map_or(0, BTreeMap::len)
    }

    pub fn term_count(&self) -> usize {
        self.df.len()
    }

    /// Non-zero entries as (term, collection, df), term-major.
    pub fn entries(&self) -> impl Iterator<Item = (&Stem, &CollectionId, u64)> + '_ {
        self.df
            .iter()
            .flat_map(|(t, row)| row.iter().map(move |(c, &n)| (t, c, n)))
    }

    /// Collection holding the most documents with `term`; ties go to the
    /// lexicographically smaller name.
    pub fn max_owner(&self, term: &Stem) -> Option<(&CollectionId, u64)> {
        self.max_owner.get(term).map(|(c, n)| (c, *n))
    }
}
