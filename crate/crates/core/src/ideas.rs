//! Dual-score ranking of candidate research paths.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const SCALE_MIN: u8 = 1;
pub const SCALE_MAX: u8 = 5;

/// A keyword path scored for non-obviousness (1 = fully obvious, 5 = not
/// obvious) and feasibility (1 = not feasible, 5 = fully feasible).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPath {
    pub path: Vec<String>,
    pub obviousness: u8,
    pub feasibility: u8,
}

impl ScoredPath {
    pub fn combined(&self) -> f64 {
        combined_score(self.obviousness, self.feasibility)
    }

    pub fn in_scale(&self) -> bool {
        (SCALE_MIN..=SCALE_MAX).contains(&self.obviousness) && (SCALE_MIN..=SCALE_MAX).contains(&self.feasibility)
    }
}

/// Product of the two scores.
pub fn combined_score(obviousness: u8, feasibility: u8) -> f64 {
    obviousness as f64 * feasibility as f64
}

/// Sorts by combined score descending, then path ascending.
pub fn rank_paths(mut paths: Vec<ScoredPath>) -> Vec<ScoredPath> {
    paths.sort_by(|a, b| b.combined().total_cmp(&a.combined()).then_with(|| a.path.cmp(&b.path)));
    paths
}
