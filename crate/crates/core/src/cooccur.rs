//! Keyword co-occurrence graph and shortest keyword paths.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::kpaths::{k_shortest_paths, quantize_cost, units_to_cost, WeightedGraph};
use crate::text::normalize_label;

/// Nodes are normalized keywords with their document frequency; an edge's
/// weight counts the documents in which both endpoints occur.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceGraph {
    pub nodes: BTreeMap<String, u32>,
    /// Keyed by `(a, b)` with `a < b`.
    pub edges: BTreeMap<(String, String), u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordPath {
    pub keywords: Vec<String>,
    pub cost: f64,
}

impl CooccurrenceGraph {
    pub fn build<I, D, S>(documents: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut g = CooccurrenceGraph::default();
        for doc in documents {
            let kws: BTreeSet<String> = doc
                .into_iter()
                .map(|k| normalize_label(k.as_ref()))
                .filter(|k| !k.is_empty())
                .collect();
            let kws: Vec<String> = kws.into_iter().collect();
            for (i, a) in kws.iter().enumerate() {
                *g.nodes.entry(a.clone()).or_insert(0) += 1;
                for b in &kws[i + 1..] {
                    *g.edges.entry((a.clone(), b.clone())).or_insert(0) += 1;
                }
            }
        }
        g
    }

    pub fn weight(&self, a: &str, b: &str) -> u32 {
        let key = if a < b { (String::from(a), String::from(b)) } else { (String::from(b), String::from(a)) };
        self.edges.get(&key).copied().unwrap_or(0)
    }

    pub fn contains(&self, keyword: &str) -> bool {
        self.nodes.contains_key(keyword)
    }

    /// Up to `k` loopless paths with edge cost `1 / weight`, ordered by
    /// `(cost, keyword sequence)`. Endpoints are normalized first; `None` if
    /// either is absent from the graph.
    pub fn shortest_paths(&self, from: &str, to: &str, k: usize) -> Option<Vec<KeywordPath>> {
        let from = normalize_label(from);
        let to = normalize_label(to);
        let index: BTreeMap<&str, usize> = self.nodes.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        let names: Vec<&str> = self.nodes.keys().map(String::as_str).collect();
        let (&s, &t) = (index.get(from.as_str())?, index.get(to.as_str())?);
        let mut g = WeightedGraph::new(names.len());
        for ((a, b), &w) in &self.edges {
            g.add_edge(index[a.as_str()], index[b.as_str()], quantize_cost(1.0 / w as f64));
        }
        Some(
            k_shortest_paths(&g, s, t, k)
                .into_iter()
                .map(|p| KeywordPath {
                    keywords: p.nodes.iter().map(|&i| String::from(names[i])).collect(),
                    cost: units_to_cost(p.cost),
                })
                .collect(),
        )
    }
}
