//! Ranked lists and reciprocal rank fusion.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Items ordered by `(score desc, id asc)` with no duplicate ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub source: String,
    pub items: Vec<(String, f64)>,
}

impl RankedList {
    /// Sorts `scores` into ranked order, keeping the best score of any
    /// duplicated id, then truncates to `top_n`.
    pub fn from_scores(source: impl Into<String>, scores: Vec<(String, f64)>, top_n: usize) -> Self {
        let mut best: BTreeMap<String, f64> = BTreeMap::new();
        for (id, s) in scores {
            best.entry(id)
                .and_modify(|cur| {
                    if s > *cur {
                        *cur = s
                    }
                })
                .or_insert(s);
        }
        let mut items: Vec<(String, f64)> = best.into_iter().collect();
        items.sort_by(|a, b| by_score_then_id(a.1, &a.0, b.1, &b.0));
        items.truncate(top_n);
        RankedList { source: source.into(), items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(id, _)| id.as_str())
    }

    /// 1-based rank of `id`, if present.
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|(c, _)| c == id).map(|p| p + 1)
    }
}

/// Ordering used by every ranked structure: score descending, id ascending.
pub fn by_score_then_id(sa: f64, ia: &str, sb: f64, ib: &str) -> Ordering {
    sb.total_cmp(&sa).then_with(|| ia.cmp(ib))
}

/// Output of [`rrf_fuse`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedResult {
    pub items: Vec<(String, f64)>,
    /// chunk id -> (source -> 1-based rank in that source)
    pub contributing_ranks: BTreeMap<String, BTreeMap<String, usize>>,
}

impl FusedResult {
    pub fn truncate(&mut self, n: usize) {
        self.items.truncate(n);
        let keep: alloc::collections::BTreeSet<&String> = self.items.iter().map(|(id, _)| id).collect();
        self.contributing_ranks.retain(|id, _| keep.contains(id));
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(id, _)| id.as_str())
    }
}

/// Reduced fractions must stay below this bound so cross-multiplication fits in u128.
const EXACT_LIMIT: u128 = 1 << 60;

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Exact value of `Σ 1/d` as a reduced fraction, if it stays within bounds.
fn reciprocal_sum(denominators: &[u64]) -> Option<(u128, u128)> {
    let (mut num, mut den) = (0u128, 1u128);
    for &d in denominators {
        let d = d as u128;
        num = num.checked_mul(d)?.checked_add(den)?;
        den = den.checked_mul(d)?;
        let g = gcd(num, den);
        num /= g;
        den /= g;
        if den >= EXACT_LIMIT || num >= EXACT_LIMIT {
            return None;
        }
    }
    Some((num, den))
}

/// Reciprocal rank fusion: `score(c) = Σ 1/(k_rrf + rank_c)` over the lists
/// containing `c`, ranks starting at 1.
///
/// Scores are compared exactly (as rationals) whenever the denominators allow,
/// so items whose reciprocal sums are equal always fall back to the id
/// tie-break regardless of the order the lists are given in.
pub fn rrf_fuse(lists: &[RankedList], k_rrf: u32) -> FusedResult {
    let mut ranks: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut denominators: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut seen_sources: BTreeMap<&str, usize> = BTreeMap::new();
    for (li, list) in lists.iter().enumerate() {
        let n = seen_sources.entry(list.source.as_str()).or_insert(0);
        let source = if *n == 0 { list.source.clone() } else { alloc::format!("{}#{}", list.source, li) };
        *n += 1;
        for (pos, (id, _)) in list.items.iter().enumerate() {
            let rank = pos + 1;
            ranks.entry(id.clone()).or_default().insert(source.clone(), rank);
            denominators.entry(id.clone()).or_default().push(k_rrf as u64 + rank as u64);
        }
    }

    let mut exact: Vec<(String, Option<(u128, u128)>, f64)> = denominators
        .into_iter()
        .map(|(id, mut dens)| {
            dens.sort_unstable();
            let float: f64 = dens.iter().map(|&d| 1.0 / d as f64).sum();
            (id, reciprocal_sum(&dens), float)
        })
        .collect();
    let all_exact = exact.iter().all(|(_, e, _)| e.is_some());
    if all_exact {
        exact.sort_by(|a, b| {
            let (an, ad) = a.1.unwrap();
            let (bn, bd) = b.1.unwrap();
            (bn * ad).cmp(&(an * bd)).then_with(|| a.0.cmp(&b.0))
        });
    } else {
        exact.sort_by(|a, b| by_score_then_id(a.2, &a.0, b.2, &b.0));
    }
    let items = exact
        .into_iter()
        .map(|(id, e, float)| {
            let score = match e {
                Some((n, d)) if all_exact => n as f64 / d as f64,
                _ => float,
            };
            (id, score)
        })
        .collect();
    FusedResult { items, contributing_ranks: ranks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn list(source: &str, ids: &[&str]) -> RankedList {
        let n = ids.len();
        RankedList::from_scores(
            source,
            ids.iter().enumerate().map(|(i, id)| (String::from(*id), (n - i) as f64)).collect(),
            usize::MAX,
        )
    }

    #[test]
    fn from_scores_orders_and_dedups() {
        let l = RankedList::from_scores(
            "x",
            vec![("b".into(), 1.0), ("a".into(), 1.0), ("c".into(), 2.0), ("a".into(), 0.5)],
            10,
        );
        assert_eq!(l.ids().collect::<Vec<_>>(), ["c", "a", "b"]);
    }

    #[test]
    fn single_list_order_is_preserved() {
        let l = list("dense", &["q", "b", "z", "a"]);
        let fused = rrf_fuse(&[l.clone()], 60);
        assert_eq!(fused.ids().collect::<Vec<_>>(), l.ids().collect::<Vec<_>>());
    }

    #[test]
    fn two_source_example() {
        // A: 1st dense, 3rd sparse; B: 2nd dense, 1st sparse.
        let dense = list("dense", &["A", "B", "C"]);
        let sparse = list("sparse", &["B", "D", "A"]);
        let fused = rrf_fuse(&[dense, sparse], 60);
        let a = 1.0 / 61.0 + 1.0 / 63.0;
        let b = 1.0 / 62.0 + 1.0 / 61.0;
        assert!(b > a);
        assert_eq!(&fused.items[0].0, "B");
        assert_eq!(&fused.items[1].0, "A");
        assert!((fused.items[0].1 - b).abs() < 1e-15);
        assert_eq!(fused.contributing_ranks["A"]["sparse"], 3);
    }

    #[test]
    fn single_source_item_scores_single_term() {
        let fused = rrf_fuse(&[list("dense", &["A", "B"]), list("sparse", &["A"])], 60);
        let b = fused.items.iter().find(|(id, _)| id == "B").unwrap().1;
        assert_eq!(b, 1.0 / 62.0);
    }

    #[test]
    fn equal_rational_sums_tie_break_by_id() {
        // With k = 10: 1/12 == 1/20 + 1/30.
        let s1 = list("s1", &["p", "z"]); // z rank 2 -> 1/12
        let mut s2_ids: Vec<String> = (0..9).map(|i| alloc::format!("f{i}")).collect();
        s2_ids.push("a".into()); // a rank 10 -> 1/20
        let s2 = list("s2", &s2_ids.iter().map(String::as_str).collect::<Vec<_>>());
        let mut s3_ids: Vec<String> = (0..19).map(|i| alloc::format!("g{i:02}")).collect();
        s3_ids.push("a".into()); // a rank 20 -> 1/30
        let s3 = list("s3", &s3_ids.iter().map(String::as_str).collect::<Vec<_>>());
        for perm in [[0usize, 1, 2], [2, 1, 0], [1, 2, 0]] {
            let ls = [s1.clone(), s2.clone(), s3.clone()];
            let ordered: Vec<RankedList> = perm.iter().map(|&i| ls[i].clone()).collect();
            let fused = rrf_fuse(&ordered, 10);
            let pa = fused.items.iter().position(|(id, _)| id == "a").unwrap();
            let pz = fused.items.iter().position(|(id, _)| id == "z").unwrap();
            assert!(pa < pz, "equal sums must tie-break by id");
            let tied = fused.items[pa].1;
            assert_eq!(fused.items[pz].1, tied);
            assert!(fused.items[pa..=pz].iter().all(|(_, s)| *s == tied));
        }
    }
}
