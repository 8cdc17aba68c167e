// Acceptance checks. Each criterion prints one PASS/FAIL line; the process
// exits non-zero when any fails. Oracles here are written independently of
// the library code they check.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num::rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use scimem::author::{answer, build_memory, EPISODIC_SECTION, PERSONA_SECTION, QUESTION_SECTION, SEMANTIC_SECTION};
use scimem::bench::collab::{build_collab, eligible_works, random_predictions, score_collab};
use scimem::bench::nskp::build_nskp;
use scimem::bench::scitwin::{build_scitwin, SciTwinParams};
use scimem::config::{Config, HleBudgets};
use scimem::corpus::Corpus;
use scimem::domain::{build_graph, find_path_between, ConceptGraph, ConceptRecord, DomainAgent};
use scimem::orchestrator::hle::{run_hle_workflow, DomainLexicon, HleWorkflow};
use scimem::orchestrator::{
    mas_query, Agent, AgentKind, AgentRegistry, AgentRegistryEntry, COMPETING_VIEWPOINTS, ERROR_MARKER,
};
use scimem::providers::{MockProvider, Providers};
use scimem::{Error, Result};
use scimem_core::ideas::{rank_paths, ScoredPath};
use scimem_core::{rrf_fuse, Bm25Params, PeriodKey, PeriodLevel, RankedList, SparseIndex};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::*;

const RRF_TOL: f64 = 1e-12;
const RRF_INSTANCES: usize = 200;
const RRF_BUDGET: Duration = Duration::from_secs(5);
const BM25_TOL: f64 = 1e-9;
const BM25_CASES: usize = 50;
const KPATH_GRAPHS: usize = 100;
const KPATH_BUDGET: Duration = Duration::from_secs(30);
const COST_TOL: f64 = 1e-12;
const BENCH_ITEMS: usize = 500;
const CHI_P: f64 = 0.01;
const COLLAB_TRIALS: u64 = 1000;
const COLLAB_TOL_10: f64 = 0.03;
const COLLAB_TOL_30: f64 = 0.015;
const ORCH_RUNS: u64 = 50;

type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

// ---- retrieval -------------------------------------------------------------

fn rrf_oracle(lists: &[Vec<String>], k: u32) -> Vec<(String, Ratio<i128>)> {
    let mut acc: BTreeMap<String, Ratio<i128>> = BTreeMap::new();
    for l in lists {
        for (i, id) in l.iter().enumerate() {
            let term = Ratio::new(1, k as i128 + i as i128 + 1);
            *acc.entry(id.clone()).or_insert_with(|| Ratio::from_integer(0)) += term;
        }
    }
    let mut v: Vec<(String, Ratio<i128>)> = acc.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

fn ratio_f64(r: &Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn rrf_equivalence() -> Check {
    let mut r = rng(11);
    let start = Instant::now();
    for case in 0..RRF_INSTANCES {
        let n_chunks = r.gen_range(1..=20);
        let pool: Vec<String> = (0..n_chunks).map(|i| format!("c{i:02}")).collect();
        let n_lists = r.gen_range(2..=4);
        let k = *[10u32, 60, 100].choose(&mut r).unwrap();
        let mut lists = Vec::new();
        for _ in 0..n_lists {
            let len = r.gen_range(0..=n_chunks);
            let mut l: Vec<String> = pool.choose_multiple(&mut r, len).cloned().collect();
            l.shuffle(&mut r);
            lists.push(l);
        }
        let ranked: Vec<RankedList> = lists
            .iter()
            .enumerate()
            .map(|(i, l)| RankedList {
                source: format!("s{i}"),
                items: l.iter().enumerate().map(|(p, id)| (id.clone(), 1.0 / (p + 1) as f64)).collect(),
            })
            .collect();
        let got = rrf_fuse(&ranked, k);
        let want = rrf_oracle(&lists, k);
        ensure!(got.items.len() == want.len(), "case {case}: {} fused items, oracle {}", got.items.len(), want.len());
        for (i, ((gid, gs), (wid, ws))) in got.items.iter().zip(&want).enumerate() {
            ensure!(gid == wid, "case {case}: position {i} is {gid}, oracle {wid}");
            ensure!((gs - ratio_f64(ws)).abs() <= RRF_TOL, "case {case}: {gid} scored {gs}, oracle {}", ratio_f64(ws));
        }
    }
    let took = start.elapsed();
    ensure!(took < RRF_BUDGET, "took {took:?}");
    Ok(())
}

fn bm25_oracle() -> Check {
    let words = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"];
    let (k1, b) = (1.2, 0.75);
    let mut r = rng(12);
    for case in 0..BM25_CASES {
        let docs: Vec<Vec<&str>> =
            (0..2).map(|_| (0..r.gen_range(1..=15)).map(|_| *words.choose(&mut r).unwrap()).collect()).collect();
        let query: Vec<&str> = (0..r.gen_range(1..=4)).map(|_| *words.choose(&mut r).unwrap()).collect();
        let texts: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
        let index = SparseIndex::build(Bm25Params::default(), [("d0", texts[0].as_str()), ("d1", texts[1].as_str())])
            .map_err(|e| format!("{e:?}"))?;
        let got = index.score_all(&query.join(" "));

        let n = 2.0;
        let avgdl = (docs[0].len() + docs[1].len()) as f64 / 2.0;
        let terms: BTreeSet<&str> = query.iter().copied().collect();
        let mut want: BTreeMap<String, f64> = BTreeMap::new();
        for (di, d) in docs.iter().enumerate() {
            let mut total = 0.0;
            let mut hit = false;
            for t in &terms {
                let tf = d.iter().filter(|w| *w == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                hit = true;
                let df = docs.iter().filter(|x| x.contains(t)).count() as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                total += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avgdl));
            }
            if hit {
                want.insert(format!("d{di}"), total);
            }
        }
        ensure!(
            got.keys().eq(want.keys()),
            "case {case}: scored {:?}, oracle {:?}",
            got.keys().collect::<Vec<_>>(),
            want.keys().collect::<Vec<_>>()
        );
        for (id, w) in &want {
            ensure!((got[id] - w).abs() <= BM25_TOL, "case {case}: {id} scored {}, oracle {w}", got[id]);
        }
    }
    Ok(())
}

// ---- domain paths ----------------------------------------------------------

/// Every simple path from `a` to `b`, costs in hundredths.
fn all_simple_paths(adj: &BTreeMap<String, BTreeMap<String, i64>>, a: &str, b: &str) -> Vec<(i64, Vec<String>)> {
    fn walk(
        adj: &BTreeMap<String, BTreeMap<String, i64>>,
        cur: &str,
        goal: &str,
        path: &mut Vec<String>,
        cost: i64,
        out: &mut Vec<(i64, Vec<String>)>,
    ) {
        if cur == goal {
            out.push((cost, path.clone()));
            return;
        }
        for (next, c) in adj.get(cur).into_iter().flatten() {
            if path.contains(next) {
                continue;
            }
            path.push(next.clone());
            walk(adj, next, goal, path, cost + c, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(adj, a, b, &mut vec![a.to_string()], 0, &mut out);
    out.sort();
    out
}

fn kpaths_oracle() -> Check {
    let floor = Config::default().domain.edge_cost_floor;
    let floor_h = (floor * 100.0).round() as i64;
    let mut r = rng(13);
    let start = Instant::now();
    for g in 0..KPATH_GRAPHS {
        let n = r.gen_range(2..=8);
        let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let mut concepts: Vec<ConceptRecord> = ids.iter().map(|id| concept(id, id, 1, None)).collect();
        // similarities in hundredths so every cost is exact
        let mut adj: BTreeMap<String, BTreeMap<String, i64>> = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                if r.gen_bool(0.5) {
                    let sim_h: i64 = r.gen_range(1..=100);
                    concepts[i].related.push((ids[j].clone(), sim_h as f64 / 100.0));
                    let cost = (100 - sim_h).max(floor_h);
                    adj.entry(ids[i].clone()).or_default().insert(ids[j].clone(), cost);
                    adj.entry(ids[j].clone()).or_default().insert(ids[i].clone(), cost);
                }
            }
        }
        let (graph, _) = ConceptGraph::from_concepts(&concepts).map_err(|e| e.to_string())?;
        for a in &ids {
            for b in &ids {
                if a == b {
                    continue;
                }
                let all = all_simple_paths(&adj, a, b);
                for k in 1..=5 {
                    let got = find_path_between(&graph, a, b, k, floor).map_err(|e| e.to_string())?;
                    let want = &all[..k.min(all.len())];
                    ensure!(got.len() == want.len(), "graph {g} {a}->{b} k={k}: {} paths, oracle {}", got.len(), want.len());
                    for (p, (c, nodes)) in got.iter().zip(want) {
                        ensure!(&p.node_ids == nodes, "graph {g} {a}->{b} k={k}: {:?} vs oracle {nodes:?}", p.node_ids);
                        ensure!(
                            (p.total_cost - *c as f64 / 100.0).abs() <= COST_TOL,
                            "graph {g} {a}->{b}: cost {} vs oracle {}",
                            p.total_cost,
                            *c as f64 / 100.0
                        );
                    }
                }
            }
        }
    }
    let took = start.elapsed();
    ensure!(took < KPATH_BUDGET, "took {took:?}");
    Ok(())
}

// ---- author memory ---------------------------------------------------------

fn mock_providers(seed: u64) -> Providers {
    Providers::from_mock(MockProvider::new(Config::default().provider.dimension, seed))
}

fn semantic_cache() -> Check {
    let mut corpus = Corpus { authors: vec![author("solo")], documents: Vec::new(), cutoff: None };
    let mut r = rng(14);
    for y in 2011..2021 {
        for i in 0..4 {
            let kws: Vec<&str> = VOCAB.choose_multiple(&mut r, 3).copied().collect();
            corpus.documents.push(doc(
                &format!("d{y}-{i}"),
                "solo",
                date(y, 1 + 3 * i as u32, 10),
                &format!("{} in {y}", kws[0]),
                &format!("We examine {} and {} through {}.", kws[0], kws[1], kws[2]),
            ));
        }
    }
    let cfg = Config::default();
    let run = || -> std::result::Result<BTreeMap<String, Vec<u8>>, String> {
        let m = build_memory(&corpus, "solo", &mock_providers(5), &cfg).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let saved = m.save(dir.path()).map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        for entry in std::fs::read_dir(&saved).map_err(|e| e.to_string())? {
            let p = entry.map_err(|e| e.to_string())?.path();
            files.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).map_err(|e| e.to_string())?);
        }
        // L1 keys are calendar years; L2 spans are three-year windows from 2000
        let years: BTreeSet<i32> = (2011..2021).collect();
        let window = |y: i32| 2000 + 3 * (y - 2000).div_euclid(3);
        let year_key = |y: i32| PeriodKey { level: PeriodLevel::L1, span_start: date(y, 1, 1), span_end: date(y, 12, 31) };
        let l2: Vec<_> = m.semantic.at_level(PeriodLevel::L2).collect();
        let windows: BTreeSet<i32> = years.iter().map(|&y| window(y)).collect();
        if l2.len() != windows.len() {
            return Err(format!("{} L2 summaries, expected {}", l2.len(), windows.len()));
        }
        for s in l2 {
            let start = s.key.span_start.format("%Y").to_string().parse::<i32>().unwrap();
            let want: BTreeSet<PeriodKey> = years.iter().filter(|&&y| window(y) == start).map(|&y| year_key(y)).collect();
            let got: BTreeSet<PeriodKey> = s.covered_children.iter().copied().collect();
            if got != want || got.len() != s.covered_children.len() {
                return Err(format!("{} covers {:?}, expected {:?}", s.key, s.covered_children, want));
            }
        }
        Ok(files)
    };
    let first = run()?;
    let second = run()?;
    ensure!(!first.is_empty(), "nothing saved");
    for (name, bytes) in &first {
        ensure!(second.get(name) == Some(bytes), "{name} differs between runs");
    }
    Ok(())
}

fn author_fidelity() -> Check {
    let mut corpus = Corpus { authors: vec![author("alice"), author("bob")], documents: Vec::new(), cutoff: None };
    let mut r = rng(15);
    for (who, topics) in [("alice", &VOCAB[..18]), ("bob", &VOCAB[18..])] {
        for i in 0..20 {
            let kws: Vec<&str> = topics.choose_multiple(&mut r, 3).copied().collect();
            corpus.documents.push(doc(
                &format!("{who}-{i}"),
                who,
                date(2005 + i, 6, 1),
                &format!("{} and {}", kws[0], kws[1]),
                &format!("This work relates {} to {} and {}.", kws[0], kws[1], kws[2]),
            ));
        }
    }
    let providers = Providers::from_mock(
        MockProvider::new(64, 3).with_response("rewrite search queries", "relevant topics: methods and results"),
    );
    let cfg = Config::default();
    let mut mems = BTreeMap::new();
    for a in ["alice", "bob"] {
        mems.insert(a, build_memory(&corpus, a, &providers, &cfg).map_err(|e| e.to_string())?);
    }
    let owned: BTreeMap<&str, BTreeSet<String>> = ["alice", "bob"]
        .iter()
        .map(|a| (*a, corpus.documents.iter().filter(|d| d.author_id == *a).map(|d| d.doc_id.clone()).collect()))
        .collect();
    let mut cited_total = 0;
    for q in 0..100 {
        let who = if q % 2 == 0 { "alice" } else { "bob" };
        let query = format!("What do you think about {} and {}?", VOCAB[q % VOCAB.len()], VOCAB[(q * 7 + 3) % VOCAB.len()]);
        let a = answer(&mems[who], &query, &providers, &cfg).map_err(|e| e.to_string())?;
        for c in &a.cited_chunk_ids {
            let doc_id = c.rsplit_once('#').map_or(c.as_str(), |(d, _)| d);
            ensure!(owned[who].contains(doc_id), "query {q} for {who} cited {c}");
        }
        cited_total += a.cited_chunk_ids.len();
        let prompt = a.prompt.ok_or_else(|| format!("query {q}: no prompt assembled"))?.render();
        let pos: Vec<Option<usize>> =
            [PERSONA_SECTION, SEMANTIC_SECTION, EPISODIC_SECTION, QUESTION_SECTION].iter().map(|s| prompt.find(s)).collect();
        ensure!(pos.iter().all(Option::is_some), "query {q}: a section is missing");
        ensure!(pos.windows(2).all(|w| w[0] < w[1]), "query {q}: sections out of order {pos:?}");
    }
    ensure!(cited_total > 0, "no chunk was ever cited");
    Ok(())
}

// ---- benchmarks ------------------------------------------------------------

fn chi_square_uniform(indices: &[usize], bins: usize) -> f64 {
    let mut counts = vec![0f64; bins];
    for &i in indices {
        counts[i] += 1.0;
    }
    let e = indices.len() as f64 / bins as f64;
    counts.iter().map(|c| (c - e) * (c - e) / e).sum()
}

fn benchmark_structure() -> Check {
    let critical = ChiSquared::new(9.0).map_err(|e| e.to_string())?.inverse_cdf(1.0 - CHI_P);

    let corpus = synthetic_corpus(70, 22, &[], 16);
    let items = build_nskp(&corpus, &mut rng(17));
    ensure!(items.len() >= BENCH_ITEMS, "only {} NSKP items", items.len());
    let items = &items[..BENCH_ITEMS];
    for (n, it) in items.iter().enumerate() {
        ensure!(it.options.len() == 10, "item {n}: {} options", it.options.len());
        ensure!((3..=5).contains(&it.truth.len()), "item {n}: {} truth keywords", it.truth.len());
        ensure!(it.options[it.answer_index] == it.truth, "item {n}: answer slot is not the truth");
        let truth: BTreeSet<&String> = it.truth.iter().collect();
        let correct = it.options.iter().filter(|o| o.iter().collect::<BTreeSet<_>>() == truth).count();
        ensure!(correct == 1, "item {n}: {correct} correct options");
        let distractors: Vec<&Vec<String>> =
            it.options.iter().enumerate().filter(|(i, _)| *i != it.answer_index).map(|(_, o)| o).collect();
        ensure!(distractors.len() == 9, "item {n}: {} distractors", distractors.len());
        for d in distractors {
            ensure!(d.iter().all(|k| !truth.contains(k)), "item {n}: distractor {d:?} overlaps truth");
        }
    }
    let stat = chi_square_uniform(&items.iter().map(|i| i.answer_index).collect::<Vec<_>>(), 10);
    ensure!(stat < critical, "NSKP answer positions: chi-square {stat:.2} >= {critical:.2}");

    let concepts = discipline_concepts(2);
    let ids: Vec<&str> = concepts.iter().map(|c| c.concept_id.as_str()).collect();
    let corpus = synthetic_corpus(32, 22, &ids, 18);
    let providers = mock_providers(9);
    let domain = build_graph(&snapshot(concepts.clone(), Vec::new()), providers.embedder.as_ref(), &Config::default().domain)
        .map_err(|e| e.to_string())?;
    let params = SciTwinParams { n_fact: 0, n_style: 17, context: 5 };
    let mut r = rng(19);
    let mut styles = Vec::new();
    for a in &corpus.authors {
        let (_, s) = build_scitwin(&corpus, &domain, &a.author_id, params, providers.generator.as_ref(), providers.embedder.as_ref(), &mut r)
            .map_err(|e| e.to_string())?;
        styles.extend(s);
    }
    ensure!(styles.len() >= BENCH_ITEMS, "only {} style items", styles.len());
    let styles = &styles[..BENCH_ITEMS];
    for (n, s) in styles.iter().enumerate() {
        ensure!(s.options.len() == 10, "style item {n}: {} options", s.options.len());
    }
    let stat = chi_square_uniform(&styles.iter().map(|s| s.answer_index).collect::<Vec<_>>(), 10);
    ensure!(stat < critical, "style answer positions: chi-square {stat:.2} >= {critical:.2}");
    Ok(())
}

fn collab_protocol() -> Check {
    let concepts = discipline_concepts(1);
    let roots: BTreeSet<&str> = ROOTS.iter().map(|(id, _)| *id).collect();
    let tag_ids: Vec<&str> = concepts.iter().map(|c| c.concept_id.as_str()).collect();
    let root_ids: Vec<&str> = roots.iter().copied().collect();
    let mut r = rng(20);
    let mut works = Vec::new();
    // one eligible work and one work failing each single filter
    let good = || work("planted-ok", &["p0", "p1"], 2025, 11, &[("R-PHYS", 0.3), ("R-CS", 0.9)]);
    works.push(good());
    let mut w = good();
    w.doc_id = "planted-year".into();
    w.year = 2024;
    works.push(w);
    let mut w = good();
    w.doc_id = "planted-cites".into();
    w.cited_by_count = 10;
    works.push(w);
    let mut w = good();
    w.doc_id = "planted-authors".into();
    w.author_ids = vec!["p0".into(), "p0".into()];
    works.push(w);
    let mut w = good();
    w.doc_id = "planted-abstract".into();
    w.abstract_text.clear();
    works.push(w);
    let mut w = good();
    w.doc_id = "planted-disciplines".into();
    w.concept_tags = vec![("R-PHYS".into(), 0.9), ("R-CS".into(), 0.29), ("R-CS-0".into(), 0.9)];
    works.push(w);
    for i in works.len()..50 {
        let n_auth = r.gen_range(1..=4);
        let mut authors: Vec<String> = (0..n_auth).map(|_| format!("p{}", r.gen_range(0..12))).collect();
        if r.gen_bool(0.1) {
            authors.push(authors[0].clone());
        }
        let n_tags = r.gen_range(0..=4);
        let pool = if r.gen_bool(0.6) { &root_ids } else { &tag_ids };
        let picked: Vec<&str> = pool.choose_multiple(&mut r, n_tags).copied().collect();
        let tags: Vec<(&str, f64)> = picked.into_iter().map(|c| (c, *[0.2, 0.29, 0.3, 0.6].choose(&mut r).unwrap())).collect();
        let refs: Vec<&str> = authors.iter().map(String::as_str).collect();
        let mut w = work(&format!("w{i:02}"), &refs, *[2024, 2025, 2025].choose(&mut r).unwrap(), r.gen_range(5..20), &tags);
        if r.gen_bool(0.08) {
            w.abstract_text.clear();
        }
        if r.gen_bool(0.05) {
            w.title = " ".into();
        }
        works.push(w);
    }
    let snap = snapshot(concepts.clone(), works);
    let (graph, _) = ConceptGraph::from_concepts(&snap.concepts).map_err(|e| e.to_string())?;

    // one predicate per protocol filter
    let filters: [(&str, fn(&scimem::domain::SnapshotWork, &BTreeSet<&str>) -> bool); 5] = [
        ("year", |w, _| w.year == 2025),
        ("citations", |w, _| w.cited_by_count > 10),
        ("author list", |w, _| {
            let distinct: BTreeSet<&String> = w.author_ids.iter().collect();
            distinct.len() >= 2 && distinct.len() == w.author_ids.len()
        }),
        ("abstract", |w, _| !w.title.trim().is_empty() && !w.abstract_text.trim().is_empty()),
        ("disciplines", |w, roots| {
            let d: BTreeSet<&str> =
                w.concept_tags.iter().filter(|(c, s)| *s >= 0.3 && roots.contains(c.as_str())).map(|(c, _)| c.as_str()).collect();
            d.len() >= 2
        }),
    ];
    let want: BTreeSet<&str> =
        snap.works.iter().filter(|w| filters.iter().all(|(_, f)| f(w, &roots))).map(|w| w.doc_id.as_str()).collect();
    let got: BTreeSet<&str> = eligible_works(&snap, &graph).iter().map(|w| w.doc_id.as_str()).collect();
    ensure!(got == want, "eligible {got:?}, oracle {want:?}");
    ensure!(got.contains("planted-ok"), "the planted eligible work was filtered out");
    ensure!(!want.is_empty() && want.len() < 50, "degenerate fixture: {} eligible", want.len());
    for (name, f) in &filters {
        let only: Vec<&str> = snap
            .works
            .iter()
            .filter(|w| !f(w, &roots) && filters.iter().filter(|(n, _)| n != name).all(|(_, g)| g(w, &roots)))
            .map(|w| w.doc_id.as_str())
            .collect();
        ensure!(!only.is_empty(), "{name}: no work fails only this filter");
        ensure!(only.iter().all(|id| !got.contains(id)), "{name}: {only:?} failed only this filter yet passed");
    }

    // random baseline on a snapshot where every first author has 40 prior collaborators
    let mut works = Vec::new();
    for f in 0..12 {
        let first = format!("f{f:02}");
        for c in 0..40 {
            works.push(work(&format!("old-{f}-{c}"), &[&first, &format!("c{f:02}-{c:02}")], 2020, 3, &[("R-PHYS", 0.9)]));
        }
        works.push(work(&format!("new-{f}"), &[&first, &format!("n{f:02}")], 2025, 20, &[("R-PHYS", 0.5), ("R-CS", 0.5)]));
    }
    let snap = snapshot(concepts, works);
    let (graph, _) = ConceptGraph::from_concepts(&snap.concepts).map_err(|e| e.to_string())?;
    for (negs, tol) in [(10usize, COLLAB_TOL_10), (30, COLLAB_TOL_30)] {
        let items = build_collab(&snap, &graph, negs, &mut rng(21));
        ensure!(items.len() == 12, "{negs} negatives: {} items", items.len());
        ensure!(items.iter().all(|i| i.candidates.len() == negs + 1), "{negs} negatives: wrong candidate count");
        let mut total = 0.0;
        for t in 0..COLLAB_TRIALS {
            let preds = random_predictions(&items, &mut rng(1000 + t));
            total += score_collab(&preds, &items).map_err(|e| e.to_string())?.get("accuracy").unwrap_or(f64::NAN);
        }
        let mean = total / COLLAB_TRIALS as f64;
        let expect = 1.0 / (negs + 1) as f64;
        ensure!((mean - expect).abs() <= tol, "{negs} negatives: random accuracy {mean:.4}, expected {expect:.4} ± {tol}");
    }
    Ok(())
}

// ---- cross-domain recruitment ----------------------------------------------

struct Echo(String);

impl Agent for Echo {
    fn respond(&self, _: &str) -> Result<String> {
        Ok(self.0.clone())
    }
}

fn hle_budgets() -> Check {
    let lexicon = DomainLexicon::default();
    let fruits = ["apple", "banana", "cherry", "damson", "elder", "fig"];
    let mut mock = MockProvider::new(64, 4).with_response(
        "KEYWORD: <term>",
        fruits.iter().map(|f| format!("KEYWORD: {f}")).collect::<Vec<_>>().join("\n"),
    );
    // each keyword pulls strongly towards its own two concepts
    for f in fruits {
        mock = mock.with_anchor(f, f, 8.0);
    }
    let providers = Providers::from_mock(mock);
    let mut agents = BTreeMap::new();
    for (d, dom) in lexicon.domains.iter().enumerate() {
        let mut concepts = Vec::new();
        let mut works = Vec::new();
        for c in 0..12 {
            let cid = format!("D{d}-C{c:02}");
            concepts.push(concept(&cid, &format!("{} {}", fruits[c / 2], if c % 2 == 0 { "root" } else { "variant" }), 1, None));
            for a in 0..10 {
                let aid = format!("D{d}-C{c}-A{a}");
                works.push(work(&format!("{cid}-W{a}"), &[&aid], 2020, 100 - a as u64, &[(&cid, 0.9)]));
            }
        }
        let build = build_graph(&snapshot(concepts, works), providers.embedder.as_ref(), &Config::default().domain)
            .map_err(|e| e.to_string())?;
        agents.insert(dom.name.clone(), Arc::new(DomainAgent::new(dom.name.clone(), build, providers.clone(), Default::default())));
    }
    let question = "A theorem about a quantum molecule: which protein algorithm sets the market price?";
    let factory = |id: &str| -> Result<Arc<dyn Agent>> { Ok(Arc::new(Echo(format!("Plan from {id}.")))) };
    let run = |budgets: HleBudgets| {
        let wf = HleWorkflow {
            lexicon: &lexicon,
            domain_agents: &agents,
            author_factory: &factory,
            coordinator: providers.generator.as_ref(),
            solver: providers.generator.as_ref(),
            budgets,
        };
        run_hle_workflow(question, &wf).map_err(|e| e.to_string())
    };
    let budgets = HleBudgets { max_keywords_per_domain: 3, max_concepts_per_keyword: 2, max_authors_per_concept: 2, max_authors_total: 24 };
    ensure!(HleBudgets::default() == budgets, "default budgets differ: {:?}", HleBudgets::default());

    let check = |o: &scimem::orchestrator::hle::HleOutcome, total: usize| -> Check {
        ensure!(o.domains.len() == 6, "detected {:?}", o.domains);
        let mut per_concept: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        let mut per_keyword: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
        let mut per_domain: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for r in &o.recruits {
            per_concept.entry(&r.concept_id).or_default().insert(&r.author_id);
            per_keyword.entry((&r.domain, &r.keyword)).or_default().insert(&r.concept_id);
            per_domain.entry(&r.domain).or_default().insert(&r.keyword);
        }
        ensure!(per_concept.values().all(|s| s.len() <= 2), "more than 2 authors for a concept");
        ensure!(per_keyword.values().all(|s| s.len() <= 2), "more than 2 concepts for a keyword");
        ensure!(per_domain.values().all(|s| s.len() <= 3), "more than 3 keywords for a domain");
        ensure!(o.keywords.iter().all(|k| k.keywords.len() <= 3), "more than 3 keywords extracted");
        ensure!(o.recruits.len() <= total, "{} recruits over the total of {total}", o.recruits.len());
        Ok(())
    };
    let a = run(budgets)?;
    check(&a, 24)?;
    ensure!(a.recruits.len() == 24, "the total cap should bind on this fixture, got {}", a.recruits.len());
    let b = run(budgets)?;
    ensure!(a == b, "two runs differ");
    // without the total cap, each per-level cap must bind on its own
    let open = run(HleBudgets { max_authors_total: 1000, ..budgets })?;
    check(&open, 1000)?;
    ensure!(open.recruits.len() == 6 * 3 * 2 * 2, "uncapped total recruited {}", open.recruits.len());
    Ok(())
}

// ---- orchestrator ----------------------------------------------------------

struct Down;

impl Agent for Down {
    fn respond(&self, _: &str) -> Result<String> {
        Err(Error::ProviderUnavailable("connection refused".into()))
    }
}

fn orchestrator_trace() -> Check {
    let subtasks = [
        "SUBTASK t-inc | inc | State the effect of X on Y.",
        "SUBTASK t-dec | dec | Assess how X changes Y.",
        "SUBTASK t-neu | neu | Summarize context for Y.",
        "SUBTASK t-down | down | Check an external source.",
    ];
    for seed in 0..ORCH_RUNS {
        let mut lines: Vec<&str> = subtasks.to_vec();
        lines.shuffle(&mut rng(seed));
        let mut plan = lines.join("\n");
        if seed % 3 == 0 {
            plan.push_str("\nDEPENDS t-neu -> t-inc");
        }
        let mock = MockProvider::new(32, seed)
            .with_response("Break the user's problem", plan)
            .with_response("(inc):\nX increases Y.\n\nAnswer B (dec):\nX decreases Y.", "CONTRADICTION: opposite signs for the effect of X on Y")
            .with_response("(dec):\nX decreases Y.\n\nAnswer B (inc):\nX increases Y.", "CONTRADICTION: opposite signs for the effect of X on Y")
            .with_response("consistency checker", "CONSISTENT");
        let providers = Providers::from_mock(mock);
        let mut reg = AgentRegistry::new();
        let agents: [(&str, Arc<dyn Agent>); 4] = [
            ("inc", Arc::new(Echo("X increases Y.".into()))),
            ("dec", Arc::new(Echo("X decreases Y.".into()))),
            ("neu", Arc::new(Echo("Y is measured yearly.".into()))),
            ("down", Arc::new(Down)),
        ];
        for (id, h) in agents {
            reg.register_local(AgentRegistryEntry::local(id, AgentKind::Author, format!("{id} specialist")), h)
                .map_err(|e| e.to_string())?;
        }
        let trace = mas_query("Does X raise Y?", &reg, &providers, 1 + (seed as usize % 4)).map_err(|e| format!("run {seed}: {e}"))?;
        ensure!(trace.outputs.len() == trace.plan.subtasks.len(), "run {seed}: {} outputs for {} subtasks", trace.outputs.len(), trace.plan.subtasks.len());
        ensure!(trace.plan.subtasks.len() == 4, "run {seed}: plan has {} subtasks", trace.plan.subtasks.len());
        let down = trace.outputs.iter().find(|o| o.agent_id == "down").ok_or(format!("run {seed}: no output for failing agent"))?;
        ensure!(down.failed() && down.text.starts_with(ERROR_MARKER), "run {seed}: failing agent not marked");
        let planted = trace.report.contradictions.iter().any(|c| {
            let pair: BTreeSet<&str> = [c.agent_a.as_str(), c.agent_b.as_str()].into();
            pair == BTreeSet::from(["inc", "dec"])
        });
        ensure!(planted, "run {seed}: contradiction not reported: {:?}", trace.report.contradictions);
        ensure!(trace.report.contradictions.len() == 1, "run {seed}: spurious contradictions {:?}", trace.report.contradictions);
        let p = &trace.integration_prompt.user_prompt;
        let section = p.find(COMPETING_VIEWPOINTS).ok_or(format!("run {seed}: no competing viewpoints section"))?;
        let tail = &p[section..];
        ensure!(tail.contains("inc") && tail.contains("dec"), "run {seed}: section does not name both agents");
    }
    Ok(())
}

// ---- idea ranking ----------------------------------------------------------

fn dual_score_monotonicity() -> Check {
    let cells: Vec<(u8, u8)> = (1..=5).flat_map(|o| (1..=5).map(move |f| (o, f))).collect();
    let full: Vec<ScoredPath> =
        cells.iter().map(|&(o, f)| ScoredPath { path: vec![format!("p{o}{f}")], obviousness: o, feasibility: f }).collect();
    let mut tables = vec![full];
    // every two-path table, both name orders
    for &(o1, f1) in &cells {
        for &(o2, f2) in &cells {
            for names in [["a", "b"], ["b", "a"]] {
                tables.push(vec![
                    ScoredPath { path: vec![names[0].into()], obviousness: o1, feasibility: f1 },
                    ScoredPath { path: vec![names[1].into()], obviousness: o2, feasibility: f2 },
                ]);
            }
        }
    }
    for t in tables {
        let ranked = rank_paths(t.clone());
        let pos = |p: &ScoredPath| ranked.iter().position(|q| q.path == p.path).unwrap();
        for p in &t {
            for q in &t {
                let dominates = p.obviousness >= q.obviousness
                    && p.feasibility >= q.feasibility
                    && (p.obviousness, p.feasibility) != (q.obviousness, q.feasibility);
                ensure!(!dominates || pos(p) < pos(q), "({}, {}) ranked below ({}, {})", p.obviousness, p.feasibility, q.obviousness, q.feasibility);
            }
        }
    }
    Ok(())
}

// ---- end to end ------------------------------------------------------------

fn e2e_smoke() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_scimem"))
        .args(["bench", "run", "--task", "scitwin", "--seed", "42", "--data-dir"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "exit {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    let raw = std::fs::read_to_string(dir.path().join("bench/scitwin-42-report.jsonl")).map_err(|e| e.to_string())?;
    let line: serde_json::Value = serde_json::from_str(raw.lines().next().unwrap_or("")).map_err(|e| e.to_string())?;
    let metrics = line["report"]["metrics"].as_object().ok_or("report has no metrics")?;
    ensure!(!metrics.is_empty(), "empty metrics");
    for (k, v) in metrics {
        let v = v.as_f64().ok_or(format!("{k} is not a number"))?;
        ensure!((0.0..=1.0).contains(&v), "{k} = {v} outside [0, 1]");
    }
    ensure!(line["report"]["n_items"].as_u64().unwrap_or(0) > 0, "no items scored");
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("rrf oracle equivalence", rrf_equivalence),
        ("bm25 hand oracle", bm25_oracle),
        ("k-shortest-paths oracle", kpaths_oracle),
        ("semantic cache consistency", semantic_cache),
        ("author-agent fidelity", author_fidelity),
        ("benchmark structure", benchmark_structure),
        ("collaborator protocol", collab_protocol),
        ("cross-domain recruitment budgets", hle_budgets),
        ("orchestrator trace", orchestrator_trace),
        ("dual-scoring monotonicity", dual_score_monotonicity),
        ("end-to-end smoke", e2e_smoke),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        match f() {
            Ok(()) => println!("PASS {name} ({:.2?})", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
