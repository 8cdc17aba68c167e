//! Domain concept graph, semantic concept index and the four navigation
//! tools: search, expand, path finding and expert lookup.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use scimem_core::kpaths::{quantize_cost, units_to_cost};
use scimem_core::{k_shortest_paths, DenseIndex, WeightedGraph};
use serde::{Deserialize, Serialize};

use crate::config::DomainConfig;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::persist;
use crate::providers::{Embedder, GenerationRequest, Providers};

const KIND: &str = "domain_graph";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptRecord {
    pub concept_id: String,
    pub label: String,
    #[serde(default)]
    pub level: u32,
    #[serde(default)]
    pub definition: String,
    #[serde(default)]
    pub ancestor_ids: Vec<String>,
    /// `(concept_id, similarity in (0, 1])`
    #[serde(default)]
    pub related: Vec<(String, f64)>,
    /// `(doc_id, cited_by_count)`
    #[serde(default)]
    pub work_refs: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotWork {
    pub doc_id: String,
    #[serde(default)]
    pub author_ids: Vec<String>,
    #[serde(default)]
    pub cited_by_count: u64,
    #[serde(default)]
    pub concept_tags: Vec<(String, f64)>,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub title: String,
    pub year: i32,
    #[serde(default)]
    pub venue: Option<String>,
}

/// Optional author metadata; absent authors render with unknown affiliation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotAuthor {
    pub author_id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub affiliation: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub concepts: Vec<ConceptRecord>,
    #[serde(default)]
    pub works: Vec<SnapshotWork>,
    #[serde(default)]
    pub authors: Vec<SnapshotAuthor>,
}

impl Snapshot {
    pub fn parse(raw: &str) -> Result<Self> {
        serde_json::from_str(raw).map_err(|e| Error::Parse(format!("snapshot: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&raw).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptGraph {
    pub nodes: BTreeMap<String, ConceptRecord>,
    /// `(child, parent)`
    pub hierarchical_edges: BTreeSet<(String, String)>,
    /// Keyed `(a, b)` with `a < b`; value is the similarity.
    #[serde(with = "persist::map_as_pairs")]
    pub associative_edges: BTreeMap<(String, String), f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptPath {
    pub node_ids: Vec<String>,
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptBrief {
    pub concept_id: String,
    pub label: String,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub concept: ConceptBrief,
    pub parents: Vec<ConceptBrief>,
    pub children: Vec<ConceptBrief>,
    pub associative: Vec<(ConceptBrief, f64)>,
}

/// A work with its authors and concept tags, the unit counted by expert lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedWork {
    pub doc_id: String,
    pub author_ids: Vec<String>,
    pub cited_by_count: u64,
    pub concept_tags: Vec<(String, f64)>,
}

impl From<&SnapshotWork> for TaggedWork {
    fn from(w: &SnapshotWork) -> Self {
        TaggedWork {
            doc_id: w.doc_id.clone(),
            author_ids: w.author_ids.clone(),
            cited_by_count: w.cited_by_count,
            concept_tags: w.concept_tags.clone(),
        }
    }
}

/// One tagged work per corpus document, credited to the document's author.
pub fn corpus_works(corpus: &Corpus) -> Vec<TaggedWork> {
    corpus
        .documents
        .iter()
        .map(|d| TaggedWork {
            doc_id: d.doc_id.clone(),
            author_ids: vec![d.author_id.clone()],
            cited_by_count: d.cited_by_count,
            concept_tags: d.concept_tags.clone(),
        })
        .collect()
}

/// Everything produced from one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBuild {
    pub graph: ConceptGraph,
    pub index: DenseIndex,
    pub works: Vec<TaggedWork>,
    pub authors: Vec<SnapshotAuthor>,
    /// References to concepts missing from the snapshot; the edges were dropped.
    pub dangling_references: usize,
}

impl DomainBuild {
    pub fn save(&self, path: &Path) -> Result<()> {
        persist::save(path, KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        persist::load(path, KIND)
    }
}

impl ConceptGraph {
    pub fn concept(&self, id: &str) -> Result<&ConceptRecord> {
        self.nodes.get(id).ok_or_else(|| Error::UnknownConcept(id.to_string()))
    }

    fn brief(&self, id: &str) -> ConceptBrief {
        let c = &self.nodes[id];
        ConceptBrief { concept_id: c.concept_id.clone(), label: c.label.clone(), level: c.level }
    }

    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.associative_edges.get(&key).copied()
    }

    /// Builds the graph from concept records. Dangling ancestor or related
    /// ids are dropped and counted.
    pub fn from_concepts(concepts: &[ConceptRecord]) -> Result<(Self, usize)> {
        let mut g = ConceptGraph::default();
        for c in concepts {
            if c.concept_id.is_empty() {
                return Err(Error::Parse("concept with empty concept_id".into()));
            }
            if g.nodes.insert(c.concept_id.clone(), c.clone()).is_some() {
                return Err(Error::Parse(format!("duplicate concept_id {}", c.concept_id)));
            }
            for (other, sim) in &c.related {
                if other == &c.concept_id {
                    return Err(Error::Parse(format!("concept {} relates to itself", c.concept_id)));
                }
                if !(*sim > 0.0 && *sim <= 1.0) {
                    return Err(Error::Parse(format!(
                        "concept {}: similarity {sim} to {other} outside (0, 1]",
                        c.concept_id
                    )));
                }
            }
        }
        let mut dangling = 0;
        for c in concepts {
            for a in &c.ancestor_ids {
                if g.nodes.contains_key(a) && a != &c.concept_id {
                    g.hierarchical_edges.insert((c.concept_id.clone(), a.clone()));
                } else {
                    dangling += 1;
                }
            }
            for (other, sim) in &c.related {
                if !g.nodes.contains_key(other) {
                    dangling += 1;
                    continue;
                }
                let key = if &c.concept_id < other {
                    (c.concept_id.clone(), other.clone())
                } else {
                    (other.clone(), c.concept_id.clone())
                };
                // listed from both sides with different scores: keep the stronger link
                let w = g.associative_edges.entry(key).or_insert(*sim);
                *w = w.max(*sim);
            }
        }
        Ok((g, dangling))
    }
}

/// Text embedded for a concept: label, definition, then up to `n` abstracts
/// of its most cited works.
pub fn concept_text(concept: &ConceptRecord, works: &BTreeMap<&str, &SnapshotWork>, threshold: f64, n: usize) -> String {
    let mut refs: BTreeMap<&str, u64> = BTreeMap::new();
    for (doc, cites) in &concept.work_refs {
        refs.insert(doc.as_str(), *cites);
    }
    for w in works.values() {
        if w.concept_tags.iter().any(|(c, s)| c == &concept.concept_id && *s >= threshold) {
            refs.entry(w.doc_id.as_str()).or_insert(w.cited_by_count);
        }
    }
    let mut ranked: Vec<(&str, u64)> = refs.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut text = concept.label.clone();
    if !concept.definition.trim().is_empty() {
        text.push_str(". ");
        text.push_str(concept.definition.trim());
    }
    for (doc, _) in ranked.into_iter().filter(|(d, _)| works.get(d).is_some_and(|w| !w.abstract_text.is_empty())).take(n) {
        text.push('\n');
        text.push_str(works[doc].abstract_text.trim());
    }
    text
}

/// Builds the concept graph and embeds every concept.
pub fn build_graph(snapshot: &Snapshot, embedder: &dyn Embedder, cfg: &DomainConfig) -> Result<DomainBuild> {
    let (graph, dangling_references) = ConceptGraph::from_concepts(&snapshot.concepts)?;
    let works: BTreeMap<&str, &SnapshotWork> = snapshot.works.iter().map(|w| (w.doc_id.as_str(), w)).collect();
    let mut index = DenseIndex::new(embedder.dimension());
    for c in graph.nodes.values() {
        let text = concept_text(c, &works, cfg.tag_threshold, cfg.abstracts_per_concept);
        index.insert(&c.concept_id, embedder.embed(&text)?.values)?;
    }
    Ok(DomainBuild {
        graph,
        index,
        works: snapshot.works.iter().map(TaggedWork::from).collect(),
        authors: snapshot.authors.clone(),
        dangling_references,
    })
}

pub fn search_concept(
    index: &DenseIndex,
    graph: &ConceptGraph,
    query: &str,
    embedder: &dyn Embedder,
    top_n: usize,
) -> Result<Vec<(ConceptRecord, f64)>> {
    let q = embedder.embed(query)?;
    let hits = index.search(&q.values, top_n)?;
    hits.items
        .into_iter()
        .map(|(id, score)| Ok((graph.concept(&id)?.clone(), score)))
        .collect()
}

pub fn expand_concept(graph: &ConceptGraph, concept_id: &str) -> Result<Neighborhood> {
    graph.concept(concept_id)?;
    let parents = graph
        .hierarchical_edges
        .iter()
        .filter(|(c, _)| c == concept_id)
        .map(|(_, p)| graph.brief(p))
        .collect();
    let children = graph
        .hierarchical_edges
        .iter()
        .filter(|(_, p)| p == concept_id)
        .map(|(c, _)| graph.brief(c))
        .collect();
    let mut associative: Vec<(ConceptBrief, f64)> = graph
        .associative_edges
        .iter()
        .filter_map(|((a, b), w)| {
            if a == concept_id {
                Some((graph.brief(b), *w))
            } else if b == concept_id {
                Some((graph.brief(a), *w))
            } else {
                None
            }
        })
        .collect();
    associative.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.concept_id.cmp(&y.0.concept_id)));
    Ok(Neighborhood { concept: graph.brief(concept_id), parents, children, associative })
}

pub fn edge_cost(similarity: f64, floor: f64) -> f64 {
    (1.0 - similarity).max(floor)
}

/// Up to `k` loopless paths over associative edges, ordered by
/// `(total_cost, node sequence)`.
pub fn find_path_between(graph: &ConceptGraph, a: &str, b: &str, k: usize, floor: f64) -> Result<Vec<ConceptPath>> {
    graph.concept(a)?;
    graph.concept(b)?;
    let ids: Vec<&str> = graph.nodes.keys().map(String::as_str).collect();
    let pos: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut wg = WeightedGraph::new(ids.len());
    for ((x, y), sim) in &graph.associative_edges {
        wg.add_edge(pos[x.as_str()], pos[y.as_str()], quantize_cost(edge_cost(*sim, floor)));
    }
    Ok(k_shortest_paths(&wg, pos[a], pos[b], k)
        .into_iter()
        .map(|p| ConceptPath {
            node_ids: p.nodes.iter().map(|&i| ids[i].to_string()).collect(),
            total_cost: units_to_cost(p.cost),
        })
        .collect())
}

/// Authors of works tagged with the concept at `>= threshold`, ranked by
/// summed citations, ties by author id.
pub fn get_expert_authors_for_concept(
    graph: &ConceptGraph,
    works: &[TaggedWork],
    concept_id: &str,
    k: usize,
    threshold: f64,
) -> Result<Vec<(String, u64)>> {
    graph.concept(concept_id)?;
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for w in works {
        if !seen.insert(w.doc_id.as_str()) {
            continue;
        }
        if w.concept_tags.iter().any(|(c, s)| c == concept_id && *s >= threshold) {
            let authors: BTreeSet<&str> = w.author_ids.iter().map(String::as_str).collect();
            for a in authors {
                *totals.entry(a).or_insert(0) += w.cited_by_count;
            }
        }
    }
    let mut ranked: Vec<(String, u64)> = totals.into_iter().map(|(a, c)| (a.to_string(), c)).collect();
    ranked.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    ranked.truncate(k);
    Ok(ranked)
}

/// A domain expert agent: one built snapshot plus providers.
pub struct DomainAgent {
    pub domain_id: String,
    pub build: DomainBuild,
    pub providers: Providers,
    pub cfg: DomainConfig,
}

/// Options accepted by [`DomainAgent::handle`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainOptions {
    /// `search` (default), `expand`, `path` or `experts`.
    pub tool: Option<String>,
    pub concept_id: Option<String>,
    pub a: Option<String>,
    pub b: Option<String>,
    pub k: Option<usize>,
    pub top_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReply {
    pub answer: String,
    pub citations: Vec<String>,
    pub data: serde_json::Value,
}

impl DomainAgent {
    pub fn new(domain_id: impl Into<String>, build: DomainBuild, providers: Providers, cfg: DomainConfig) -> Self {
        DomainAgent { domain_id: domain_id.into(), build, providers, cfg }
    }

    pub fn graph(&self) -> &ConceptGraph {
        &self.build.graph
    }

    pub fn search(&self, query: &str, top_n: usize) -> Result<Vec<(ConceptRecord, f64)>> {
        search_concept(&self.build.index, &self.build.graph, query, self.providers.embedder.as_ref(), top_n)
    }

    pub fn experts(&self, concept_id: &str, k: usize) -> Result<Vec<(String, u64)>> {
        get_expert_authors_for_concept(&self.build.graph, &self.build.works, concept_id, k, self.cfg.tag_threshold)
    }

    pub fn paths(&self, a: &str, b: &str, k: usize) -> Result<Vec<ConceptPath>> {
        find_path_between(&self.build.graph, a, b, k, self.cfg.edge_cost_floor)
    }

    /// Runs one tool. Missing arguments are validation errors.
    pub fn handle(&self, query: &str, opts: &DomainOptions) -> Result<DomainReply> {
        let need = |v: &Option<String>, name: &str| {
            v.clone().ok_or_else(|| Error::InvalidRequest(format!("option `{name}` is required for this tool")))
        };
        let to_json = |v: &dyn erased::Json| v.json();
        match opts.tool.as_deref().unwrap_or("search") {
            "search" => {
                if query.trim().is_empty() {
                    return Err(Error::InvalidRequest("query is empty".into()));
                }
                let hits = self.search(query, opts.top_n.unwrap_or(5))?;
                let answer = hits.iter().map(|(c, s)| format!("{} ({}) {:.3}", c.label, c.concept_id, s)).collect::<Vec<_>>().join("\n");
                let citations = hits.iter().map(|(c, _)| c.concept_id.clone()).collect();
                Ok(DomainReply { answer, citations, data: to_json(&hits) })
            }
            "expand" => {
                let id = need(&opts.concept_id, "concept_id")?;
                let n = expand_concept(&self.build.graph, &id)?;
                let answer = format!(
                    "{}: {} parents, {} children, {} associative neighbours",
                    n.concept.label,
                    n.parents.len(),
                    n.children.len(),
                    n.associative.len()
                );
                Ok(DomainReply { answer, citations: vec![id], data: to_json(&n) })
            }
            "path" => {
                let (a, b) = (need(&opts.a, "a")?, need(&opts.b, "b")?);
                let paths = self.paths(&a, &b, opts.k.unwrap_or(3))?;
                let answer = paths
                    .iter()
                    .map(|p| format!("{} (cost {:.3})", p.node_ids.join(" -> "), p.total_cost))
                    .collect::<Vec<_>>()
                    .join("\n");
                let citations = paths.iter().flat_map(|p| p.node_ids.clone()).collect::<BTreeSet<_>>().into_iter().collect();
                Ok(DomainReply { answer, citations, data: to_json(&paths) })
            }
            "experts" => {
                let id = need(&opts.concept_id, "concept_id")?;
                let experts = self.experts(&id, opts.k.unwrap_or(5))?;
                let answer = experts.iter().map(|(a, c)| format!("{a}: {c} citations")).collect::<Vec<_>>().join("\n");
                Ok(DomainReply { answer, citations: experts.iter().map(|(a, _)| a.clone()).collect(), data: to_json(&experts) })
            }
            other => Err(Error::InvalidRequest(format!("unknown domain tool {other:?}"))),
        }
    }

    /// Free-text specialist answer: ground the instruction in the nearest
    /// concepts and their neighbourhoods, then generate.
    pub fn respond(&self, instruction: &str) -> Result<String> {
        let hits = self.search(instruction, 5)?;
        let mut context = String::new();
        for (c, score) in &hits {
            context.push_str(&format!("- {} ({}, similarity {:.2}): {}\n", c.label, c.concept_id, score, c.definition.trim()));
            if let Ok(n) = expand_concept(&self.build.graph, &c.concept_id) {
                let related: Vec<String> = n.associative.iter().take(3).map(|(b, _)| b.label.clone()).collect();
                if !related.is_empty() {
                    context.push_str(&format!("  related: {}\n", related.join(", ")));
                }
            }
        }
        let req = GenerationRequest::new(
            format!("You are the domain expert agent for {}. Answer from the concept map provided.", self.domain_id),
            format!("Relevant concepts:\n{context}\nTask: {instruction}"),
        );
        Ok(self.providers.generator.generate(&req)?.text)
    }
}

mod erased {
    pub trait Json {
        fn json(&self) -> serde_json::Value;
    }

    impl<T: serde::Serialize> Json for T {
        fn json(&self) -> serde_json::Value {
            serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
        }
    }
}
