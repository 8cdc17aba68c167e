mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{concept, snapshot, work};
use scimem::config::{Config, DomainConfig};
use scimem::domain::{build_graph, DomainAgent, DomainBuild, DomainOptions, Snapshot};
use scimem::error::Error;
use scimem::providers::{MockProvider, Providers};
use serde_json::Value;

const RAW: &str = include_str!("../fixtures/domain.json");

fn providers() -> Providers {
    Providers::from_mock(MockProvider::new(64, 7))
}

fn agent() -> DomainAgent {
    let cfg = Config::default().domain;
    let snap = Snapshot::parse(RAW).unwrap();
    let build = build_graph(&snap, providers().embedder.as_ref(), &cfg).unwrap();
    DomainAgent::new("fixture", build, providers(), cfg)
}

fn raw() -> Value {
    serde_json::from_str(RAW).unwrap()
}

/// Undirected similarity table straight from the `related` lists.
fn related_table(v: &Value) -> BTreeMap<(String, String), f64> {
    let mut out = BTreeMap::new();
    for c in v["concepts"].as_array().unwrap() {
        let a = c["concept_id"].as_str().unwrap().to_string();
        for r in c["related"].as_array().unwrap() {
            let b = r[0].as_str().unwrap().to_string();
            let key = if a < b { (a.clone(), b) } else { (b, a.clone()) };
            out.insert(key, r[1].as_f64().unwrap());
        }
    }
    out
}

#[test]
fn graph_matches_snapshot() {
    let v = raw();
    let a = agent();
    let g = a.graph();
    let concepts = v["concepts"].as_array().unwrap();
    assert_eq!(g.nodes.len(), concepts.len());
    let parents: usize = concepts.iter().map(|c| c["ancestor_ids"].as_array().unwrap().len()).sum();
    assert_eq!(g.hierarchical_edges.len(), parents);
    assert_eq!(a.build.dangling_references, 0);
    let table = related_table(&v);
    assert_eq!(g.associative_edges.len(), table.len());
    for ((x, y), s) in &table {
        assert_eq!(g.similarity(x, y), Some(*s));
        assert_eq!(g.similarity(y, x), Some(*s));
    }
}

// Every simple path by exhaustive search, costs in exact hundredths.
fn all_paths(table: &BTreeMap<(String, String), f64>, a: &str, b: &str, floor: f64) -> Vec<(i64, Vec<String>)> {
    let mut adj: BTreeMap<&str, Vec<(&str, i64)>> = BTreeMap::new();
    for ((x, y), s) in table {
        let c = ((1.0 - s).max(floor) * 100.0).round() as i64;
        adj.entry(x).or_default().push((y, c));
        adj.entry(y).or_default().push((x, c));
    }
    let mut out = Vec::new();
    let mut stack = vec![(vec![a], 0i64)];
    while let Some((path, cost)) = stack.pop() {
        let last = *path.last().unwrap();
        if last == b {
            out.push((cost, path.iter().map(|s| s.to_string()).collect()));
            continue;
        }
        for (n, c) in adj.get(last).cloned().unwrap_or_default() {
            if !path.contains(&n) {
                let mut p = path.clone();
                p.push(n);
                stack.push((p, cost + c));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn paths_agree_with_exhaustive_search() {
    let v = raw();
    let a = agent();
    let table = related_table(&v);
    let floor = a.cfg.edge_cost_floor;
    let ids: Vec<&String> = a.graph().nodes.keys().collect();
    let mut checked = 0;
    for x in &ids {
        for y in &ids {
            if x == y {
                continue;
            }
            let expect = all_paths(&table, x, y, floor);
            let got = a.paths(x, y, 4).unwrap();
            assert_eq!(got.len(), expect.len().min(4), "{x} -> {y}");
            for (g, (c, _)) in got.iter().zip(&expect) {
                assert!((g.total_cost - *c as f64 / 100.0).abs() < 1e-9, "{x} -> {y}: {} vs {c}", g.total_cost);
                assert_eq!(g.node_ids.first().unwrap(), *x);
                assert_eq!(g.node_ids.last().unwrap(), *y);
            }
            let gc: Vec<i64> = got.iter().map(|p| (p.total_cost * 100.0).round() as i64).collect();
            let ec: Vec<i64> = expect.iter().take(got.len()).map(|(c, _)| *c).collect();
            assert_eq!(gc, ec);
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn experts_match_citation_sums() {
    let v = raw();
    let a = agent();
    let threshold = a.cfg.tag_threshold;
    for c in v["concepts"].as_array().unwrap() {
        let id = c["concept_id"].as_str().unwrap();
        let mut totals: BTreeMap<String, u64> = BTreeMap::new();
        for w in v["works"].as_array().unwrap() {
            let tagged = w["concept_tags"].as_array().unwrap().iter().any(|t| t[0] == id && t[1].as_f64().unwrap() >= threshold);
            if tagged {
                let authors: BTreeSet<&str> = w["author_ids"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
                for au in authors {
                    *totals.entry(au.to_string()).or_default() += w["cited_by_count"].as_u64().unwrap();
                }
            }
        }
        let mut expect: Vec<(String, u64)> = totals.into_iter().collect();
        expect.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        expect.truncate(5);
        assert_eq!(a.experts(id, 5).unwrap(), expect, "{id}");
    }
}

#[test]
fn expand_lists_parents_children_and_neighbours() {
    let a = agent();
    let phys = a.handle("", &DomainOptions { tool: Some("expand".into()), concept_id: Some("C-PHYS".into()), ..Default::default() }).unwrap();
    let n: scimem::domain::Neighborhood = serde_json::from_value(phys.data).unwrap();
    assert!(n.parents.is_empty());
    assert!(n.children.iter().any(|c| c.concept_id == "C-UHI"));

    let uhi: scimem::domain::Neighborhood =
        serde_json::from_value(a.handle("", &DomainOptions { tool: Some("expand".into()), concept_id: Some("C-UHI".into()), ..Default::default() }).unwrap().data)
            .unwrap();
    assert_eq!(uhi.parents.iter().map(|p| p.concept_id.as_str()).collect::<Vec<_>>(), ["C-PHYS"]);
    assert!(uhi.associative.windows(2).all(|w| w[0].1 >= w[1].1));
}

#[test]
fn search_finds_concepts_by_their_own_wording() {
    let v = raw();
    let a = agent();
    let mut hits = 0;
    let concepts = v["concepts"].as_array().unwrap();
    for c in concepts {
        let q = format!("{} {}", c["label"].as_str().unwrap(), c["definition"].as_str().unwrap());
        let top = a.search(&q, 3).unwrap();
        assert_eq!(top.len(), 3);
        assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
        if top.iter().any(|(r, _)| r.concept_id == c["concept_id"].as_str().unwrap()) {
            hits += 1;
        }
    }
    assert!(hits * 4 >= concepts.len() * 3, "{hits} of {}", concepts.len());
}

#[test]
fn tool_errors() {
    let a = agent();
    let opts = |tool: &str| DomainOptions { tool: Some(tool.into()), ..Default::default() };
    assert!(matches!(a.handle("", &opts("expand")), Err(Error::InvalidRequest(_))));
    assert!(matches!(a.handle("", &opts("path")), Err(Error::InvalidRequest(_))));
    assert!(matches!(a.handle("", &opts("teleport")), Err(Error::InvalidRequest(_))));
    assert!(matches!(a.handle("  ", &opts("search")), Err(Error::InvalidRequest(_))));
    let ghost = DomainOptions { tool: Some("experts".into()), concept_id: Some("C-GHOST".into()), ..Default::default() };
    assert!(matches!(a.handle("", &ghost), Err(Error::UnknownConcept(_))));
    assert!(matches!(a.paths("C-UHI", "C-GHOST", 2), Err(Error::UnknownConcept(_))));
}

#[test]
fn build_roundtrips_through_disk() {
    let a = agent();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.json");
    a.build.save(&p).unwrap();
    assert_eq!(DomainBuild::load(&p).unwrap(), a.build);
    std::fs::write(&p, "{\"format_version\": 1, \"kind\": \"corpus\", \"data\": {}}").unwrap();
    assert!(matches!(DomainBuild::load(&p), Err(Error::Parse(_))));
}

#[test]
fn dangling_references_are_dropped_and_counted() {
    let mut orphan = concept("X-1", "Orphan", 1, Some("X-MISSING"));
    orphan.related = vec![("X-ROOT".into(), 0.7), ("X-GONE".into(), 0.4)];
    let root = concept("X-ROOT", "Root", 0, None);
    let snap = snapshot(vec![root, orphan], vec![work("w", &["a"], 2020, 3, &[("X-1", 0.9)])]);
    let b = build_graph(&snap, providers().embedder.as_ref(), &DomainConfig::default()).unwrap();
    assert_eq!(b.dangling_references, 2);
    assert!(b.graph.hierarchical_edges.is_empty());
    assert_eq!(b.graph.associative_edges.len(), 1);
    assert!(find_disconnected(&b));
}

fn find_disconnected(b: &DomainBuild) -> bool {
    scimem::domain::find_path_between(&b.graph, "X-1", "X-ROOT", 3, 0.01).unwrap().len() == 1
}

#[test]
fn respond_grounds_in_nearby_concepts() {
    let cfg = Config::default().domain;
    let snap = Snapshot::parse(RAW).unwrap();
    let p = Providers::from_mock(MockProvider::new(64, 7).with_response("Relevant concepts:", "grounded reply"));
    let build = build_graph(&snap, p.embedder.as_ref(), &cfg).unwrap();
    let a = DomainAgent::new("fixture", build, p, cfg);
    assert_eq!(a.respond("How do green roofs cool cities?").unwrap(), "grounded reply");
}
