//! BM25 inverted index over chunk ids.
//!
//! `score(D, Q) = Σ_{t ∈ Q} idf(t) · tf(t, D)·(k1 + 1) / (tf(t, D) + k1·(1 − b + b·|D|/avgdl))`
//! with `idf(t) = ln(1 + (N − df + 0.5)/(df + 0.5))`, which stays positive, so
//! every chunk that contains a query term receives a positive score. Query
//! terms are deduplicated before scoring.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rank::RankedList;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub chunk_id: String,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseIndex {
    /// term -> postings sorted by chunk id
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_lengths: BTreeMap<String, u32>,
    pub avg_doc_length: f64,
    pub k1: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateChunk(pub String);

impl SparseIndex {
    pub fn new(params: Bm25Params) -> Self {
        SparseIndex {
            postings: BTreeMap::new(),
            doc_lengths: BTreeMap::new(),
            avg_doc_length: 0.0,
            k1: params.k1,
            b: params.b,
        }
    }

    pub fn build<'a>(
        params: Bm25Params,
        docs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, DuplicateChunk> {
        let mut index = SparseIndex::new(params);
        for (id, text) in docs {
            index.insert_unbalanced(id, text)?;
        }
        index.recompute_average();
        Ok(index)
    }

    pub fn insert(&mut self, chunk_id: &str, text: &str) -> Result<(), DuplicateChunk> {
        self.insert_unbalanced(chunk_id, text)?;
        self.recompute_average();
        Ok(())
    }

    fn insert_unbalanced(&mut self, chunk_id: &str, text: &str) -> Result<(), DuplicateChunk> {
        if self.doc_lengths.contains_key(chunk_id) {
            return Err(DuplicateChunk(chunk_id.into()));
        }
        let tokens = tokenize(text);
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.clone()).or_insert(0) += 1;
        }
        for (term, count) in tf {
            let list = self.postings.entry(term).or_default();
            let pos = list.partition_point(|p| p.chunk_id.as_str() < chunk_id);
            list.insert(pos, Posting { chunk_id: chunk_id.into(), tf: count });
        }
        self.doc_lengths.insert(chunk_id.into(), tokens.len() as u32);
        Ok(())
    }

    fn recompute_average(&mut self) {
        let n = self.doc_lengths.len();
        self.avg_doc_length = if n == 0 {
            0.0
        } else {
            self.doc_lengths.values().map(|&l| l as f64).sum::<f64>() / n as f64
        };
    }

    pub fn len(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_lengths.is_empty()
    }

    pub fn contains(&self, chunk_id: &str) -> bool {
        self.doc_lengths.contains_key(chunk_id)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_lengths.len() as f64;
        let df = self.postings.get(term).map(|p| p.len()).unwrap_or(0) as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    /// Scores every chunk sharing at least one term with `query`.
    pub fn score_all(&self, query: &str) -> BTreeMap<String, f64> {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        let mut scores: BTreeMap<String, f64> = BTreeMap::new();
        for term in &terms {
            let Some(postings) = self.postings.get(term) else { continue };
            let idf = self.idf(term);
            for p in postings {
                let dl = self.doc_lengths[&p.chunk_id] as f64;
                let norm = if self.avg_doc_length > 0.0 { dl / self.avg_doc_length } else { 1.0 };
                let tf = p.tf as f64;
                let s = idf * tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * norm));
                *scores.entry(p.chunk_id.clone()).or_insert(0.0) += s;
            }
        }
        scores
    }

    pub fn search(&self, query: &str, top_n: usize) -> RankedList {
        RankedList::from_scores("sparse", self.score_all(query).into_iter().collect(), top_n)
    }
}
