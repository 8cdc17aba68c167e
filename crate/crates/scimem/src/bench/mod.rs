//! Benchmark builders, predictors and scorers.

pub mod collab;
pub mod hle;
pub mod ideas;
pub mod nskp;
pub mod runner;
pub mod scitwin;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
pub use scimem_core::metrics::ScoreReport;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Options per multiple-choice item.
pub const N_OPTIONS: usize = 10;
pub const HIT_KS: [usize; 3] = [1, 3, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    SciTwin,
    Nskp,
    Collab,
    Hle,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::SciTwin, Task::Nskp, Task::Collab, Task::Hle];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::SciTwin => "scitwin",
            Task::Nskp => "nskp",
            Task::Collab => "collab",
            Task::Hle => "hle",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidRequest(format!("unknown task {s:?}; expected scitwin, nskp, collab or hle")))
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Reads an option ranking from a reply. Numbers after `RANKING:` (or
/// anywhere, when that marker is missing) are taken in order; invalid and
/// repeated indices are skipped and the missing ones appended in ascending
/// order. The flag is set when the reply was not a full permutation.
pub fn parse_ranking(text: &str, n: usize) -> (Vec<usize>, bool) {
    let upper = text.to_uppercase();
    let body = match upper.find("RANKING:") {
        Some(i) => &text[i + "RANKING:".len()..],
        None => text,
    };
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(n);
    let mut cur = String::new();
    for c in body.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_digit() {
            cur.push(c);
        } else if !cur.is_empty() {
            if let Ok(i) = cur.parse::<usize>() {
                if i < n && !seen[i] {
                    seen[i] = true;
                    out.push(i);
                }
            }
            cur.clear();
        }
    }
    let complete = out.len() == n;
    out.extend((0..n).filter(|i| !seen[*i]));
    (out, !complete)
}

/// Combines reports over disjoint item sets; `n_items` is the sum.
pub fn merge_reports(parts: &[ScoreReport]) -> ScoreReport {
    let mut metrics = std::collections::BTreeMap::new();
    for p in parts {
        for (k, v) in &p.metrics {
            metrics.insert(k.clone(), *v);
        }
    }
    ScoreReport { metrics, n_items: parts.iter().map(|p| p.n_items).sum() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_names() {
        for t in Task::ALL {
            assert_eq!(t.as_str().parse::<Task>().unwrap(), t);
        }
        assert!("nope".parse::<Task>().is_err());
    }

    #[test]
    fn ranking_parse() {
        assert_eq!(parse_ranking("RANKING: 3, 1, 0, 2", 4), (vec![3, 1, 0, 2], false));
        assert_eq!(parse_ranking("I think 2 then 2 then 9", 4), (vec![2, 0, 1, 3], true));
        assert_eq!(parse_ranking("mock response 1a2b", 10).1, true);
    }
}
