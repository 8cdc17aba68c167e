//! Semantic memory: a hierarchy of period summaries distilled from chunks.
//!
//! Map: each touched L1 period is regenerated from per-document summaries of
//! all of its chunks. Reduce: every ancestor of a touched period is
//! regenerated from its children with the evolution prompt.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use scimem_core::{PeriodHierarchy, PeriodKey, PeriodLevel};
use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::error::{Error, Result};
use crate::persist;
use crate::providers::{Embedder, GenerationRequest, Providers};

const KIND: &str = "distillation_state";

pub const EVOLUTION_INSTRUCTION: &str =
    "maturation of ideas, conceptual shifts, or changes in research focus/methodology";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub key: PeriodKey,
    pub text: String,
    pub embedding: Vec<f64>,
    /// Child keys in chronological order; empty at L1.
    #[serde(default)]
    pub covered_children: Vec<PeriodKey>,
    /// L1 only.
    #[serde(default)]
    pub covered_chunk_ids: BTreeSet<String>,
    /// Latest source date folded into this summary.
    pub updated_at: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DocumentDigest {
    chunk_ids: BTreeSet<String>,
    text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistillationState {
    pub processed_chunk_ids: BTreeSet<String>,
    #[serde(with = "persist::map_as_pairs")]
    pub summaries: BTreeMap<PeriodKey, PeriodSummary>,
    /// Per-document map outputs, reused while a document's chunk set is unchanged.
    #[serde(default)]
    doc_digests: BTreeMap<String, DocumentDigest>,
}

impl DistillationState {
    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }

    pub fn at_level(&self, level: PeriodLevel) -> impl Iterator<Item = &PeriodSummary> {
        self.summaries.values().filter(move |s| s.key.level == level)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::save(path, KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        persist::load(path, KIND)
    }

    /// Existing keys one level below `key` whose spans lie inside it.
    pub fn children_of(&self, key: &PeriodKey) -> Vec<PeriodKey> {
        let Some(child_level) = key.level.child() else { return Vec::new() };
        self.summaries.keys().filter(|k| k.level == child_level && key.contains_span(k)).copied().collect()
    }

    /// Checks that every L2/L3 summary covers exactly the existing child keys
    /// in its span and that covered chunks were processed.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        for s in self.summaries.values() {
            match s.key.level {
                PeriodLevel::L1 => {
                    if s.covered_chunk_ids.is_empty() {
                        return Err(format!("{} covers no chunks", s.key));
                    }
                    if let Some(c) = s.covered_chunk_ids.iter().find(|c| !self.processed_chunk_ids.contains(*c)) {
                        return Err(format!("{} covers unprocessed chunk {c}", s.key));
                    }
                }
                _ => {
                    let expected = self.children_of(&s.key);
                    if s.covered_children != expected {
                        return Err(format!("{} covers {:?}, expected {:?}", s.key, s.covered_children, expected));
                    }
                    if expected.is_empty() {
                        return Err(format!("{} has no children", s.key));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the reduce prompt. Children are listed in the given order, one per
/// line, each as a JSON string literal so that [`extract_reports`] can
/// recover them exactly.
pub fn evolution_prompt(child_summaries: &[String]) -> Result<GenerationRequest> {
    if child_summaries.is_empty() {
        return Err(Error::InvalidRequest("evolution prompt needs at least one child summary".into()));
    }
    let mut user = format!(
        "Analyze the following period reports, listed from earliest to latest. \
         Synthesize them into one narrative for the enclosing period that captures the {EVOLUTION_INSTRUCTION}.\n\n"
    );
    for (i, child) in child_summaries.iter().enumerate() {
        let quoted = serde_json::to_string(child).map_err(|e| Error::Internal(e.to_string()))?;
        user.push_str(&format!("Report {}: {quoted}\n", i + 1));
    }
    Ok(GenerationRequest::new(
        "You maintain a researcher's long-term memory and write concise, factual period summaries.",
        user,
    ))
}

/// Inverse of the child listing in [`evolution_prompt`].
pub fn extract_reports(user_prompt: &str) -> Vec<String> {
    user_prompt
        .lines()
        .filter_map(|line| {
            let rest = line.strip_prefix("Report ")?;
            let (n, quoted) = rest.split_once(": ")?;
            n.parse::<usize>().ok()?;
            serde_json::from_str::<String>(quoted).ok()
        })
        .collect()
}

fn document_prompt(chunks: &[&Chunk]) -> GenerationRequest {
    let mut user = String::from(
        "Summarize the key findings, methods and claims of the following excerpts from one publication.\n\n",
    );
    for c in chunks {
        user.push_str(&format!("[{}] {}\n", c.chunk_id, c.text.trim()));
    }
    GenerationRequest::new("You summarize scientific publications faithfully and concisely.", user)
}

fn period_prompt(key: &PeriodKey, doc_summaries: &[(String, String)]) -> GenerationRequest {
    let mut user = format!(
        "Write a summary of the researcher's work between {} and {} based on these publication summaries.\n\n",
        key.span_start, key.span_end
    );
    for (doc_id, text) in doc_summaries {
        user.push_str(&format!("Publication {doc_id}: {}\n", text.trim()));
    }
    GenerationRequest::new("You maintain a researcher's long-term memory and write concise, factual period summaries.", user)
}

fn embed_text(embedder: &dyn Embedder, text: &str) -> Result<Vec<f64>> {
    // Empty generations still need a vector; embed a stable placeholder.
    let t = if text.trim().is_empty() { "(empty summary)" } else { text };
    Ok(embedder.embed(t)?.values)
}

/// Result of the map step for one L1 period.
struct L1Output {
    summary: PeriodSummary,
    digests: Vec<(String, DocumentDigest)>,
}

fn distill_l1(
    key: PeriodKey,
    chunks: Vec<&Chunk>,
    cached: &BTreeMap<String, DocumentDigest>,
    providers: &Providers,
) -> Result<L1Output> {
    let mut by_doc: BTreeMap<(NaiveDate, &str), Vec<&Chunk>> = BTreeMap::new();
    for c in &chunks {
        by_doc.entry((c.timestamp, c.source_document.as_str())).or_default().push(c);
    }
    let mut doc_summaries = Vec::new();
    let mut digests = Vec::new();
    for ((_, doc_id), mut doc_chunks) in by_doc {
        doc_chunks.sort_by_key(|c| c.ordinal);
        let ids: BTreeSet<String> = doc_chunks.iter().map(|c| c.chunk_id.clone()).collect();
        let text = match cached.get(doc_id) {
            Some(d) if d.chunk_ids == ids => d.text.clone(),
            _ => providers.generator.generate(&document_prompt(&doc_chunks))?.text,
        };
        doc_summaries.push((doc_id.to_string(), text.clone()));
        digests.push((doc_id.to_string(), DocumentDigest { chunk_ids: ids, text }));
    }
    let text = providers.generator.generate(&period_prompt(&key, &doc_summaries))?.text;
    let embedding = embed_text(providers.embedder.as_ref(), &text)?;
    let updated_at = chunks.iter().map(|c| c.timestamp).max().expect("L1 period has chunks");
    Ok(L1Output {
        summary: PeriodSummary {
            key,
            text,
            embedding,
            covered_children: Vec::new(),
            covered_chunk_ids: chunks.iter().map(|c| c.chunk_id.clone()).collect(),
            updated_at,
        },
        digests,
    })
}

/// Folds `new_chunks` into the hierarchy and returns the new state.
///
/// `archive` must contain every chunk already recorded in
/// `state.processed_chunk_ids`, since touched L1 periods are regenerated from
/// all of their chunks. The input state is never modified, so a provider
/// failure leaves the caller's committed state intact.
pub fn run_distillation(
    state: &DistillationState,
    new_chunks: &[Chunk],
    archive: &BTreeMap<String, Chunk>,
    providers: &Providers,
    hierarchy: &PeriodHierarchy,
    parallelism: usize,
) -> Result<DistillationState> {
    let fresh: Vec<&Chunk> = new_chunks.iter().filter(|c| !state.processed_chunk_ids.contains(&c.chunk_id)).collect();
    if fresh.is_empty() {
        return Ok(state.clone());
    }
    let touched: BTreeSet<PeriodKey> = fresh.iter().map(|c| hierarchy.assign(c.timestamp, PeriodLevel::L1)).collect();

    // Gather each touched period's full chunk set: previously covered plus new.
    let mut members: BTreeMap<PeriodKey, Vec<&Chunk>> = BTreeMap::new();
    for key in &touched {
        let mut v = Vec::new();
        if let Some(prev) = state.summaries.get(key) {
            for id in &prev.covered_chunk_ids {
                let c = archive
                    .get(id)
                    .ok_or_else(|| Error::Internal(format!("chunk {id} covered by {key} is missing from the archive")))?;
                v.push(c);
            }
        }
        members.insert(*key, v);
    }
    for c in &fresh {
        members.get_mut(&hierarchy.assign(c.timestamp, PeriodLevel::L1)).expect("touched").push(c);
    }

    let mut next = state.clone();
    let jobs: Vec<(PeriodKey, Vec<&Chunk>)> = members.into_iter().collect();
    for batch in jobs.chunks(parallelism.max(1)) {
        let outputs: Vec<Result<L1Output>> = std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|(key, chunks)| {
                    let cached = &state.doc_digests;
                    s.spawn(move || distill_l1(*key, chunks.clone(), cached, providers))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("distillation worker panicked".into()))))
                .collect()
        });
        for out in outputs {
            let out = out?;
            next.summaries.insert(out.summary.key, out.summary);
            next.doc_digests.extend(out.digests);
        }
    }

    for level in [PeriodLevel::L2, PeriodLevel::L3] {
        let ancestors: BTreeSet<PeriodKey> = touched
            .iter()
            .filter_map(|k| hierarchy.ancestor_chain(*k).into_iter().find(|a| a.level == level))
            .collect();
        for key in ancestors {
            let children = next.children_of(&key);
            let texts: Vec<String> = children.iter().map(|c| next.summaries[c].text.clone()).collect();
            let text = providers.generator.generate(&evolution_prompt(&texts)?)?.text;
            let embedding = embed_text(providers.embedder.as_ref(), &text)?;
            let updated_at = children.iter().map(|c| next.summaries[c].updated_at).max().expect("non-empty");
            next.summaries.insert(
                key,
                PeriodSummary {
                    key,
                    text,
                    embedding,
                    covered_children: children,
                    covered_chunk_ids: BTreeSet::new(),
                    updated_at,
                },
            );
        }
    }
    next.processed_chunk_ids.extend(fresh.iter().map(|c| c.chunk_id.clone()));
    Ok(next)
}

/// The `top_n` summaries of any level closest to `query`, ties broken by
/// level then span start.
pub fn semantic_scope(
    state: &DistillationState,
    query: &str,
    embedder: &dyn Embedder,
    top_n: usize,
) -> Result<Vec<(PeriodSummary, f64)>> {
    if state.summaries.is_empty() || top_n == 0 {
        return Ok(Vec::new());
    }
    let q = embedder.embed(query)?;
    let mut scored: Vec<(f64, &PeriodSummary)> =
        state.summaries.values().map(|s| (scimem_core::cosine(&q.values, &s.embedding), s)).collect();
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.total_cmp(sa)
            .then_with(|| a.key.level.cmp(&b.key.level))
            .then_with(|| a.key.span_start.cmp(&b.key.span_start))
    });
    Ok(scored.into_iter().take(top_n).map(|(score, s)| (s.clone(), score)).collect())
}
