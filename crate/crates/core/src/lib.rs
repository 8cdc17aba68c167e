//! Pure algorithmic building blocks for a hierarchical research-memory engine.
//!
//! Everything here works on owned values and `alloc` collections only: lexical
//! tokenization and sentence segmentation, BM25 and cosine retrieval, reciprocal
//! rank fusion, loopless k-shortest paths, period arithmetic for summary
//! hierarchies, keyword co-occurrence graphs and benchmark metrics. IO,
//! providers and orchestration live in the `scimem` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bm25;
pub mod cooccur;
pub mod dense;
pub mod ideas;
pub mod kpaths;
pub mod metrics;
pub mod period;
pub mod rank;
pub mod segment;
pub mod text;

pub use bm25::{Bm25Params, SparseIndex};
pub use dense::{cosine, DenseError, DenseIndex};
pub use kpaths::{k_shortest_paths, PathHit, WeightedGraph};
pub use period::{Granularity, PeriodHierarchy, PeriodKey, PeriodLevel};
pub use rank::{rrf_fuse, FusedResult, RankedList};
