//! Second selection step: hard time/price filters, then a weighted utility
//! over min-max normalized belief, latency and price.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cori::BeliefScore;
use crate::error::{Error, Result};
use crate::index::CollectionId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityWeights {
    pub relevance: f64,
    pub time: f64,
    pub price: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        UtilityWeights {
            relevance: 0.6,
            time: 0.2,
            price: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityConstraints {
    pub max_results: usize,
    pub num_databases: usize,
    /// Latency budget in milliseconds; 0 means unlimited.
    pub ttl_ms: u64,
    /// `None` means no price ceiling.
    pub max_price: Option<f64>,
    pub weights: UtilityWeights,
}

impl Default for UtilityConstraints {
    fn default() -> Self {
        UtilityConstraints {
            max_results: 10,
            num_databases: 1,
            ttl_ms: 0,
            max_price: None,
            weights: UtilityWeights::default(),
        }
    }
}

impl UtilityConstraints {
    pub fn validate(&self) -> Result<()> {
        if self.max_results == 0 {
            return Err(Error::InvalidArgument(
                "max_results must be at least 1".into(),
            ));
        }
        if self.num_databases == 0 {
            return Err(Error::InvalidArgument(
                "num_databases must be at least 1".into(),
            ));
        }
        if let Some(p) = self.max_price {
            if p.is_nan() || p < 0.0 {
                return Err(Error::InvalidArgument(format!("max_price {p} is negative")));
            }
        }
        let w = self.weights;
        if [w.relevance, w.time, w.price]
            .iter()
            .any(|x| x.is_nan() || *x < 0.0)
        {
            return Err(Error::InvalidArgument(
                "weights must be non-negative".into(),
            ));
        }
        let sum = w.relevance + w.time + w.price;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionProfile {
    pub collection: CollectionId,
    pub est_latency_ms: u64,
    pub price: f64,
    pub record_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCollection {
    pub collection: CollectionId,
    pub belief: f64,
    pub utility: f64,
    pub rank: usize,
}

fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Ranks scored collections by utility. An empty result means every
/// collection was filtered out by the latency or price constraint.
/// Collections without a profile are treated as free and instantaneous.
pub fn utility_rank(
    scores: &[BeliefScore],
    profiles: &BTreeMap<CollectionId, CollectionProfile>,
    constraints: &UtilityConstraints,
) -> Result<Vec<RankedCollection>> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores to rank".into()));
    }
    constraints.validate()?;

    let cost = |id: &CollectionId| {
        profiles
            .get(id)
            .map_or((0, 0.0), |p| (p.est_latency_ms, p.price))
    };
    let eligible: Vec<(&BeliefScore, u64, f64)> = scores
        .iter()
        .map(|s| {
            let (latency, price) = cost(&s.collection);
            (s, latency, price)
        })
        .filter(|&(_, latency, price)| {
            let in_time = constraints.ttl_ms == 0 || latency <= constraints.ttl_ms;
            let in_budget = constraints.max_price.is_none_or(|max| price <= max);
            in_time && in_budget
        })
        .collect();

    let beliefs = min_max(&eligible.iter().map(|e| e.0.belief).collect::<Vec<_>>());
    let latencies = min_max(&eligible.iter().map(|e| e.1 as f64).collect::<Vec<_>>());
    let prices = min_max(&eligible.iter().map(|e| e.2).collect::<Vec<_>>());
    let w = constraints.weights;

    let mut ranked: Vec<RankedCollection> = eligible
        .iter()
        .enumerate()
        .map(|(i, (score, _, _))| RankedCollection {
            collection: score.collection.clone(),
            belief: score.belief,
            utility: w.relevance * beliefs[i] - w.time * latencies[i] - w.price * prices[i],
            rank: 0,
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.utility
            .partial_cmp(&a.utility)
            .unwrap_or(Ordering::Equal)
            .then_with(|| b.belief.partial_cmp(&a.belief).unwrap_or(Ordering::Equal))
            .then_with(|| a.collection.cmp(&b.collection))
    });
    ranked.truncate(constraints.num_databases);
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> CollectionId {
        CollectionId::new(s).unwrap()
    }

    fn score(name: &str, belief: f64) -> BeliefScore {
        BeliefScore {
            collection: id(name),
            belief,
            per_term: BTreeMap::new(),
            excluded: false,
        }
    }

    fn profiles(rows: &[(&str, u64, f64)]) -> BTreeMap<CollectionId, CollectionProfile> {
        rows.iter()
            .map(|&(n, latency, price)| {
                (
                    id(n),
                    CollectionProfile {
                        collection: id(n),
                        est_latency_ms: latency,
                        price,
                        record_count: 1,
                    },
                )
            })
            .collect()
    }

    fn names(ranked: &[RankedCollection]) -> Vec<&str> {
        ranked.iter().map(|r| r.collection.as_str()).collect()
    }

    fn all(n: usize) -> UtilityConstraints {
        UtilityConstraints {
            num_databases: n,
            ..Default::default()
        }
    }

    #[test]
    fn uniform_costs_preserve_belief_order() {
        let scores = [
            score("A", 0.5),
            score("B", 0.7),
            score("C", 0.45),
            score("D", 0.6),
        ];
        let p = profiles(&[
            ("A", 20, 1.0),
            ("B", 20, 1.0),
            ("C", 20, 1.0),
            ("D", 20, 1.0),
        ]);
        let ranked = utility_rank(&scores, &p, &all(4)).unwrap();
        assert_eq!(names(&ranked), ["B", "D", "A", "C"]);
        assert_eq!(
            ranked.iter().map(|r| r.rank).collect::<Vec<_>>(),
            [1, 2, 3, 4]
        );
    }

    #[test]
    fn ttl_filters_slow_collections() {
        let scores = [score("A", 0.7), score("B", 0.6)];
        let p = profiles(&[("A", 50, 0.0), ("B", 5, 0.0)]);
        let c = UtilityConstraints {
            ttl_ms: 10,
            ..all(5)
        };
        assert_eq!(names(&utility_rank(&scores, &p, &c).unwrap()), ["B"]);
    }

    #[test]
    fn price_ceiling_filters() {
        let scores = [score("A", 0.7), score("B", 0.6)];
        let p = profiles(&[("A", 0, 3.0), ("B", 0, 1.0)]);
        let c = UtilityConstraints {
            max_price: Some(2.0),
            ..all(5)
        };
        assert_eq!(names(&utility_rank(&scores, &p, &c).unwrap()), ["B"]);
        let none = UtilityConstraints {
            max_price: Some(0.5),
            ..all(5)
        };
        assert!(utility_rank(&scores, &p, &none).unwrap().is_empty());
    }

    #[test]
    fn latency_tradeoff_by_hand() {
        // beliefs {0.7, 0.6} normalize to {1, 0}; latencies {100, 10} to {1, 0};
        // with weights (0.5, 0.5, 0) both utilities are exactly 0, and the
        // belief tie-break puts the slower, higher-belief collection first.
        let scores = [score("slow", 0.7), score("fast", 0.6)];
        let p = profiles(&[("slow", 100, 1.0), ("fast", 10, 1.0)]);
        let c = UtilityConstraints {
            weights: UtilityWeights {
                relevance: 0.5,
                time: 0.5,
                price: 0.0,
            },
            ..all(2)
        };
        let ranked = utility_rank(&scores, &p, &c).unwrap();
        assert_eq!(ranked[0].utility, 0.0);
        assert_eq!(ranked[1].utility, 0.0);
        assert_eq!(names(&ranked), ["slow", "fast"]);

        // Any extra weight on time flips the order.
        let c = UtilityConstraints {
            weights: UtilityWeights {
                relevance: 0.4,
                time: 0.6,
                price: 0.0,
            },
            ..all(2)
        };
        assert_eq!(
            names(&utility_rank(&scores, &p, &c).unwrap()),
            ["fast", "slow"]
        );
    }

    #[test]
    fn truncates_to_num_databases() {
        let scores = [score("A", 0.7), score("B", 0.6), score("C", 0.5)];
        let ranked = utility_rank(&scores, &BTreeMap::new(), &all(1)).unwrap();
        assert_eq!(names(&ranked), ["A"]);
    }

    #[test]
    fn full_ties_break_by_name() {
        let scores = [score("C", 0.4), score("A", 0.4), score("B", 0.4)];
        let ranked = utility_rank(&scores, &BTreeMap::new(), &all(3)).unwrap();
        assert_eq!(names(&ranked), ["A", "B", "C"]);
    }

    #[test]
    fn constraint_validation() {
        assert!(utility_rank(&[], &BTreeMap::new(), &all(1)).is_err());
        let bad = UtilityConstraints {
            weights: UtilityWeights {
                relevance: 0.5,
                time: 0.2,
                price: 0.2,
            },
            ..all(1)
        };
        assert!(bad.validate().is_err());
        assert!(UtilityConstraints {
            max_results: 0,
            ..all(1)
        }
        .validate()
        .is_err());
        assert!(all(0).validate().is_err());
        assert!(UtilityConstraints {
            max_price: Some(-1.0),
            ..all(1)
        }
        .validate()
        .is_err());
    }
}
