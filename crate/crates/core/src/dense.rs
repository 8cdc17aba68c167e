//! Exact brute-force cosine search.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::rank::RankedList;

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (libm::sqrt(na) * libm::sqrt(nb))
}

/// Scales `v` to unit L2 norm in place; zero vectors are left untouched.
pub fn l2_normalize(v: &mut [f64]) {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DenseError {
    DimensionMismatch { expected: usize, found: usize },
    NonFinite(String),
    Duplicate(String),
}

impl fmt::Display for DenseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenseError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: index has {expected}, vector has {found}")
            }
            DenseError::NonFinite(id) => write!(f, "vector for {id} has non-finite entries"),
            DenseError::Duplicate(id) => write!(f, "{id} is already indexed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseIndex {
    pub dimension: usize,
    pub entries: BTreeMap<String, Vec<f64>>,
}

impl DenseIndex {
    pub fn new(dimension: usize) -> Self {
        DenseIndex { dimension, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, id: &str, vector: Vec<f64>) -> Result<(), DenseError> {
        if vector.len() != self.dimension {
            return Err(DenseError::DimensionMismatch { expected: self.dimension, found: vector.len() });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(DenseError::NonFinite(id.into()));
        }
        if self.entries.contains_key(id) {
            return Err(DenseError::Duplicate(id.into()));
        }
        self.entries.insert(id.into(), vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn search(&self, query: &[f64], top_n: usize) -> Result<RankedList, DenseError> {
        if query.len() != self.dimension {
            return Err(DenseError::DimensionMismatch { expected: self.dimension, found: query.len() });
        }
        let scores = self.entries.iter().map(|(id, v)| (id.clone(), cosine(query, v))).collect();
        Ok(RankedList::from_scores("dense", scores, top_n))
    }
}
