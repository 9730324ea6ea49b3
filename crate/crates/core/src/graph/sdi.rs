//! Corpus-level dependency-relation frequencies.
//!
//! The table is built once from the training split and is read-only
//! afterwards; evaluation-time queries for unseen labels are smoothed to the
//! smallest observed granularity (one count) and tallied for reporting.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::corpus::DependencyGraph;
use crate::error::GraphError;

const TOTAL_KEY: &str = "__total";

/// Relation-label counts over every directed dependency edge of a corpus.
/// The value of a label is its relative frequency, in `(0, 1]`.
#[derive(Debug, Default)]
pub struct SdiTable {
    counts: BTreeMap<String, u64>,
    total: u64,
    unseen_hits: AtomicU64,
}

impl Clone for SdiTable {
    fn clone(&self) -> Self {
        SdiTable {
            counts: self.counts.clone(),
            total: self.total,
            unseen_hits: AtomicU64::new(self.unseen_hits.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for SdiTable {
    fn eq(&self, other: &Self) -> bool {
        self.counts == other.counts && self.total == other.total
    }
}

impl SdiTable {
    /// Count every edge's relation label across the corpus.
    pub fn from_graphs<'a, I>(graphs: I) -> Result<SdiTable, GraphError>
    where
        I: IntoIterator<Item = &'a DependencyGraph>,
    {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut total = 0u64;
        for graph in graphs {
            for edge in &graph.edges {
                if edge.relation == TOTAL_KEY {
                    return Err(GraphError::ReservedLabel(edge.relation.clone()));
                }
                *counts.entry(edge.relation.clone()).or_insert(0) += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(GraphError::EmptyCorpus);
        }
        Ok(SdiTable { counts, total, unseen_hits: AtomicU64::new(0) })
    }

    pub fn total_edges(&self) -> u64 {
        self.total
    }

    /// Relative frequency of `relation`; unseen labels smooth to one count.
    pub fn value(&self, relation: &str) -> f64 {
        match self.counts.get(relation) {
            Some(&c) => c as f64 / self.total as f64,
            None => {
                self.unseen_hits.fetch_add(1, Ordering::Relaxed);
                1.0 / self.total as f64
            }
        }
    }

    /// How many lookups hit an unseen label since construction.
    pub fn unseen_queries(&self) -> u64 {
        self.unseen_hits.load(Ordering::Relaxed)
    }

    pub fn labels(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Serialize as `{label: count, "__total": total}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (label, &count) in &self.counts {
            map.insert(label.clone(), serde_json::Value::from(count));
        }
        map.insert(TOTAL_KEY.to_string(), serde_json::Value::from(self.total));
        serde_json::Value::Object(map)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<SdiTable, GraphError> {
        let map = value
            .as_object()
            .ok_or_else(|| GraphError::BadTable("expected a JSON object".to_string()))?;
        let mut counts = BTreeMap::new();
        let mut total = None;
        for (key, v) in map {
            let n = v
                .as_u64()
                .ok_or_else(|| GraphError::BadTable(format!("non-integer count for `{key}`")))?;
            if key == TOTAL_KEY {
                total = Some(n);
            } else {
                counts.insert(key.clone(), n);
            }
        }
        let total = total.ok_or_else(|| GraphError::BadTable("missing `__total`".to_string()))?;
        let sum: u64 = counts.values().sum();
        if sum != total || total == 0 {
            return Err(GraphError::BadTable(format!(
                "label counts sum to {sum} but `__total` is {total}"
            )));
        }
        Ok(SdiTable { counts, total, unseen_hits: AtomicU64::new(0) })
    }
}
