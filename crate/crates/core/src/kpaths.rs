//! Loopless k-shortest paths (Yen) over an undirected graph with integer costs.
//!
//! Costs are fixed-point integers so that equal-cost paths compare equal and
//! the `(cost, node sequence)` order is total. Nodes are dense indices; callers
//! that need a lexicographic tie-break on external ids should assign indices in
//! id order.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

/// Fixed-point units per unit of real-valued cost.
pub const COST_SCALE: f64 = 1_000_000.0;

/// Converts a real cost to fixed-point units, rounding to nearest.
pub fn quantize_cost(cost: f64) -> u64 {
    libm::round(cost * COST_SCALE) as u64
}

pub fn units_to_cost(units: u64) -> f64 {
    units as f64 / COST_SCALE
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, u64)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PathHit {
    pub cost: u64,
    pub nodes: Vec<usize>,
}

impl WeightedGraph {
    pub fn new(nodes: usize) -> Self {
        WeightedGraph { adj: vec![Vec::new(); nodes] }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Adds the undirected edge `a–b`; a repeated edge keeps the smaller cost.
    /// Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize, cost: u64) {
        if a == b {
            return;
        }
        for (x, y) in [(a, b), (b, a)] {
            let list = &mut self.adj[x];
            match list.binary_search_by_key(&y, |&(n, _)| n) {
                Ok(pos) => list[pos].1 = list[pos].1.min(cost),
                Err(pos) => list.insert(pos, (y, cost)),
            }
        }
    }

    pub fn edge_cost(&self, a: usize, b: usize) -> Option<u64> {
        self.adj
            .get(a)?
            .binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|pos| self.adj[a][pos].1)
    }

    /// Neighbors of `a` in ascending index order.
    pub fn neighbors(&self, a: usize) -> &[(usize, u64)] {
        &self.adj[a]
    }

    pub fn path_cost(&self, nodes: &[usize]) -> Option<u64> {
        nodes.windows(2).try_fold(0u64, |acc, w| Some(acc + self.edge_cost(w[0], w[1])?))
    }

    /// Lexicographically smallest minimum-cost path from `s` to `t`, avoiding
    /// `blocked_nodes` and the undirected edges in `blocked_edges`.
    fn lex_shortest(
        &self,
        s: usize,
        t: usize,
        blocked_nodes: &[bool],
        blocked_edges: &BTreeSet<(usize, usize)>,
    ) -> Option<PathHit> {
        let n = self.adj.len();
        let edge_ok = |a: usize, b: usize| !blocked_edges.contains(&(a.min(b), a.max(b)));
        // distances to t
        let mut dist: Vec<Option<u64>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[t] = Some(0);
        heap.push(Reverse((0u64, t)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if dist[u].is_some_and(|best| d > best) {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                if blocked_nodes[v] || !edge_ok(u, v) {
                    continue;
                }
                let nd = d + w;
                if dist[v].is_none_or(|cur| nd < cur) {
                    dist[v] = Some(nd);
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        let total = dist[s]?;
        let mut nodes = vec![s];
        let mut cur = s;
        while cur != t {
            let here = dist[cur]?;
            let next = self.adj[cur].iter().find(|&&(v, w)| {
                !blocked_nodes[v] && edge_ok(cur, v) && dist[v].is_some_and(|dv| dv + w == here)
            })?;
            cur = next.0;
            nodes.push(cur);
        }
        Some(PathHit { cost: total, nodes })
    }
}

/// Up to `k` loopless paths from `src` to `dst` in `(cost, node sequence)`
/// order. `src == dst` yields the single zero-cost path `[src]`.
pub fn k_shortest_paths(graph: &WeightedGraph, src: usize, dst: usize, k: usize) -> Vec<PathHit> {
    let n = graph.node_count();
    if k == 0 || src >= n || dst >= n {
        return Vec::new();
    }
    if src == dst {
        return vec![PathHit { cost: 0, nodes: vec![src] }];
    }
    let no_nodes = vec![false; n];
    let Some(first) = graph.lex_shortest(src, dst, &no_nodes, &BTreeSet::new()) else {
        return Vec::new();
    };
    let mut accepted: Vec<PathHit> = vec![first];
    let mut candidates: BTreeSet<PathHit> = BTreeSet::new();
    while accepted.len() < k {
        let last = accepted.last().expect("non-empty").clone();
        for i in 0..last.nodes.len() - 1 {
            let spur = last.nodes[i];
            let root = &last.nodes[..=i];
            let mut blocked_edges = BTreeSet::new();
            for p in &accepted {
                if p.nodes.len() > i + 1 && &p.nodes[..=i] == root {
                    let (a, b) = (p.nodes[i], p.nodes[i + 1]);
                    blocked_edges.insert((a.min(b), a.max(b)));
                }
            }
            let mut blocked_nodes = no_nodes.clone();
            for &r in &root[..i] {
                blocked_nodes[r] = true;
            }
            if let Some(spur_path) = graph.lex_shortest(spur, dst, &blocked_nodes, &blocked_edges) {
                let root_cost = graph.path_cost(root).expect("root is a path");
                let mut nodes = root[..i].to_vec();
                nodes.extend(spur_path.nodes);
                candidates.insert(PathHit { cost: root_cost + spur_path.cost, nodes });
            }
        }
        loop {
            let Some(next) = candidates.pop_first() else { return accepted };
            if !accepted.contains(&next) {
                accepted.push(next);
                break;
            }
        }
    }
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WeightedGraph {
        // A=0, B=1, C=2; similarities 0.9, 0.9, 0.5
        let mut g = WeightedGraph::new(3);
        g.add_edge(0, 1, quantize_cost(1.0 - 0.9));
        g.add_edge(1, 2, quantize_cost(1.0 - 0.9));
        g.add_edge(0, 2, quantize_cost(1.0 - 0.5));
        g
    }

    #[test]
    fn triangle_prefers_two_strong_hops() {
        let paths = k_shortest_paths(&triangle(), 0, 2, 5);
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].nodes, [0, 1, 2]);
        assert_eq!(units_to_cost(paths[0].cost), 0.2);
        assert_eq!(paths[1].nodes, [0, 2]);
        assert_eq!(units_to_cost(paths[1].cost), 0.5);
    }

    #[test]
    fn same_node_is_trivial() {
        let paths = k_shortest_paths(&triangle(), 1, 1, 3);
        assert_eq!(paths, [PathHit { cost: 0, nodes: vec![1] }]);
    }

    #[test]
    fn disconnected_is_empty() {
        let mut g = WeightedGraph::new(4);
        g.add_edge(0, 1, 5);
        g.add_edge(2, 3, 5);
        assert!(k_shortest_paths(&g, 0, 3, 3).is_empty());
    }

    #[test]
    fn ties_break_lexicographically() {
        // square 0-1-3, 0-2-3 with equal costs
        let mut g = WeightedGraph::new(4);
        g.add_edge(0, 2, 10);
        g.add_edge(2, 3, 10);
        g.add_edge(0, 1, 10);
        g.add_edge(1, 3, 10);
        let paths = k_shortest_paths(&g, 0, 3, 2);
        assert_eq!(paths[0].nodes, [0, 1, 3]);
        assert_eq!(paths[1].nodes, [0, 2, 3]);
    }
}
