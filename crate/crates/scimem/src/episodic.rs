//! Episodic memory: BM25 and dense indices over chunks, fused with RRF.

use std::collections::BTreeMap;
use std::path::Path;

use scimem_core::{rrf_fuse, Bm25Params, DenseIndex, FusedResult, RankedList, SparseIndex};
use serde::{Deserialize, Serialize};

use crate::config::RetrievalConfig;
use crate::corpus::Chunk;
use crate::error::{Error, Result};
use crate::persist;
use crate::providers::{Embedder, EmbeddingVector};

const KIND: &str = "episodic_index";

/// Both indices plus the chunks they cover, persisted as one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodicIndex {
    pub sparse: SparseIndex,
    pub dense: DenseIndex,
    pub chunks: BTreeMap<String, Chunk>,
}

impl EpisodicIndex {
    pub fn empty(params: Bm25Params, dimension: usize) -> Self {
        EpisodicIndex { sparse: SparseIndex::new(params), dense: DenseIndex::new(dimension), chunks: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Adds chunks to both indices. On error the index is left untouched.
    pub fn add_chunks(&mut self, chunks: &[Chunk], embedder: &dyn Embedder) -> Result<()> {
        if embedder.dimension() != self.dense.dimension {
            return Err(Error::DimensionMismatch { expected: self.dense.dimension, found: embedder.dimension() });
        }
        let mut next = self.clone();
        for c in chunks {
            if next.chunks.contains_key(&c.chunk_id) {
                return Err(Error::InvalidRequest(format!("chunk {} is already indexed", c.chunk_id)));
            }
            let v = embedder.embed(&c.text)?;
            next.dense.insert(&c.chunk_id, v.values)?;
            next.chunks.insert(c.chunk_id.clone(), c.clone());
        }
        next.sparse = SparseIndex::build(
            Bm25Params { k1: self.sparse.k1, b: self.sparse.b },
            next.chunks.values().map(|c| (c.chunk_id.as_str(), c.text.as_str())),
        )
        .map_err(|d| Error::Internal(format!("duplicate chunk {}", d.0)))?;
        *self = next;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::save(path, KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        persist::load(path, KIND)
    }
}

/// Builds both indices over `chunks`.
pub fn index_chunks(chunks: &[Chunk], embedder: &dyn Embedder, params: Bm25Params) -> Result<EpisodicIndex> {
    if chunks.is_empty() {
        return Err(Error::InvalidRequest("no chunks to index".into()));
    }
    let mut index = EpisodicIndex::empty(params, embedder.dimension());
    index.add_chunks(chunks, embedder)?;
    Ok(index)
}

pub fn sparse_search(index: &SparseIndex, query: &str, top_n: usize) -> RankedList {
    index.search(query, top_n)
}

pub fn dense_search(index: &DenseIndex, query: &EmbeddingVector, top_n: usize) -> Result<RankedList> {
    Ok(index.search(&query.values, top_n)?)
}

/// Hybrid retrieval: dense and sparse search run concurrently at depth
/// `candidate_multiplier * top_n`, then RRF, then truncation to `top_n`.
pub fn retrieve(
    index: &EpisodicIndex,
    embedder: &dyn Embedder,
    query: &str,
    top_n: usize,
    cfg: &RetrievalConfig,
) -> Result<FusedResult> {
    let depth = top_n.saturating_mul(cfg.candidate_multiplier).max(top_n);
    let (dense, sparse) = std::thread::scope(|s| {
        let dense = s.spawn(|| -> Result<RankedList> {
            let q = embedder.embed(query)?;
            dense_search(&index.dense, &q, depth)
        });
        let sparse = sparse_search(&index.sparse, query, depth);
        (dense.join().unwrap_or_else(|_| Err(Error::Internal("dense search panicked".into()))), sparse)
    });
    let mut fused = rrf_fuse(&[dense?, sparse], cfg.k_rrf);
    fused.truncate(top_n);
    Ok(fused)
}
