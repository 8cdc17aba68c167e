//! Interdisciplinary collaborator prediction over a works snapshot.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use scimem_core::metrics::exact_match_accuracy;
use serde::{Deserialize, Serialize};

use super::ScoreReport;
use crate::domain::{ConceptGraph, Snapshot, SnapshotWork};
use crate::error::{Error, Result};
use crate::providers::{GenerationRequest, Generator};

pub const TARGET_YEAR: i32 = 2025;
/// Works need strictly more citations than this.
pub const MIN_CITATIONS: u64 = 10;
pub const TAG_THRESHOLD: f64 = 0.3;
pub const MIN_DISCIPLINES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateProfile {
    pub author_id: String,
    pub affiliation: Option<String>,
    pub works_count: usize,
    pub cited_by_count: u64,
    /// Up to three `(discipline label, works)` pairs, most works first.
    pub top_disciplines: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollabPaper {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub disciplines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollabItem {
    pub paper: CollabPaper,
    pub first_author_id: String,
    pub candidates: Vec<CandidateProfile>,
    pub positive_id: String,
    pub n_negatives: usize,
}

/// Labels of the distinct root disciplines tagged at `>= TAG_THRESHOLD`.
pub fn work_disciplines(work: &SnapshotWork, graph: &ConceptGraph) -> Vec<String> {
    let set: BTreeSet<String> = work
        .concept_tags
        .iter()
        .filter(|(_, s)| *s >= TAG_THRESHOLD)
        .filter_map(|(c, _)| graph.nodes.get(c))
        .filter(|c| c.level == 0)
        .map(|c| c.label.clone())
        .collect();
    set.into_iter().collect()
}

/// Year, citation, metadata and discipline filters.
pub fn passes_filters(work: &SnapshotWork, graph: &ConceptGraph) -> bool {
    let distinct_authors: BTreeSet<&str> = work.author_ids.iter().map(String::as_str).collect();
    work.year == TARGET_YEAR
        && work.cited_by_count > MIN_CITATIONS
        && distinct_authors.len() >= 2
        && distinct_authors.len() == work.author_ids.len()
        && !work.title.trim().is_empty()
        && !work.abstract_text.trim().is_empty()
        && work_disciplines(work, graph).len() >= MIN_DISCIPLINES
}

pub fn eligible_works<'a>(snapshot: &'a Snapshot, graph: &ConceptGraph) -> Vec<&'a SnapshotWork> {
    snapshot.works.iter().filter(|w| passes_filters(w, graph)).collect()
}

/// Profiles from works published before the target year.
pub fn profiles(snapshot: &Snapshot, graph: &ConceptGraph) -> BTreeMap<String, CandidateProfile> {
    let affiliation: BTreeMap<&str, Option<String>> =
        snapshot.authors.iter().map(|a| (a.author_id.as_str(), a.affiliation.clone())).collect();
    let mut works: BTreeMap<&str, (usize, u64, BTreeMap<String, usize>)> = BTreeMap::new();
    for w in snapshot.works.iter().filter(|w| w.year < TARGET_YEAR) {
        let disciplines: BTreeSet<&str> = w
            .concept_tags
            .iter()
            .filter_map(|(c, _)| graph.nodes.get(c))
            .filter(|c| c.level == 0)
            .map(|c| c.label.as_str())
            .collect();
        let authors: BTreeSet<&str> = w.author_ids.iter().map(String::as_str).collect();
        for a in authors {
            let e = works.entry(a).or_default();
            e.0 += 1;
            e.1 += w.cited_by_count;
            for d in &disciplines {
                *e.2.entry(d.to_string()).or_insert(0) += 1;
            }
        }
    }
    works
        .into_iter()
        .map(|(a, (n, cites, disc))| {
            let mut top: Vec<(String, usize)> = disc.into_iter().collect();
            top.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
            top.truncate(3);
            let profile = CandidateProfile {
                author_id: a.to_string(),
                affiliation: affiliation.get(a).cloned().flatten(),
                works_count: n,
                cited_by_count: cites,
                top_disciplines: top,
            };
            (a.to_string(), profile)
        })
        .collect()
}

/// Authors who shared a pre-target-year work with `author`.
pub fn prior_collaborators(snapshot: &Snapshot, author: &str) -> BTreeSet<String> {
    snapshot
        .works
        .iter()
        .filter(|w| w.year < TARGET_YEAR && w.author_ids.iter().any(|a| a == author))
        .flat_map(|w| w.author_ids.iter())
        .filter(|a| *a != author)
        .cloned()
        .collect()
}

fn empty_profile(author_id: &str, snapshot: &Snapshot) -> CandidateProfile {
    CandidateProfile {
        author_id: author_id.to_string(),
        affiliation: snapshot.authors.iter().find(|a| a.author_id == author_id).and_then(|a| a.affiliation.clone()),
        works_count: 0,
        cited_by_count: 0,
        top_disciplines: Vec::new(),
    }
}

/// One item per eligible work: a co-author of the first author is the
/// positive and `n_negatives` prior collaborators who are not on the paper
/// are the negatives. Works whose first author lacks enough prior
/// collaborators are skipped.
pub fn build_collab(snapshot: &Snapshot, graph: &ConceptGraph, n_negatives: usize, rng: &mut impl Rng) -> Vec<CollabItem> {
    let profiles = profiles(snapshot, graph);
    let mut items = Vec::new();
    for w in eligible_works(snapshot, graph) {
        let first = &w.author_ids[0];
        let on_paper: BTreeSet<&str> = w.author_ids.iter().map(String::as_str).collect();
        let coauthors: Vec<&String> = w.author_ids[1..].iter().collect();
        let pool: Vec<String> =
            prior_collaborators(snapshot, first).into_iter().filter(|a| !on_paper.contains(a.as_str())).collect();
        if pool.len() < n_negatives {
            tracing::debug!(doc = %w.doc_id, available = pool.len(), "skipping work: too few prior collaborators");
            continue;
        }
        let positive = (*coauthors.choose(rng).expect("eligible works have co-authors")).clone();
        let mut ids: Vec<String> = pool.choose_multiple(rng, n_negatives).cloned().collect();
        ids.push(positive.clone());
        ids.shuffle(rng);
        let candidates =
            ids.iter().map(|id| profiles.get(id).cloned().unwrap_or_else(|| empty_profile(id, snapshot))).collect();
        items.push(CollabItem {
            paper: CollabPaper {
                doc_id: w.doc_id.clone(),
                title: w.title.clone(),
                abstract_text: w.abstract_text.clone(),
                disciplines: work_disciplines(w, graph),
            },
            first_author_id: first.clone(),
            candidates,
            positive_id: positive,
            n_negatives,
        });
    }
    items
}

pub fn render_collab_prompt(item: &CollabItem) -> String {
    let ids: Vec<&str> = item.candidates.iter().map(|c| c.author_id.as_str()).collect();
    let mut p = format!(
        "You are a researcher. Your name is {}.\n\n\
         You are now going to work on a new paper. The title and abstract of the paper are as follows.\n\
         Title: {}\nAbstract: {}\n\n\
         Please identify potential collaborators for this new paper from the following candidates:\n\
         Candidate collaborators: {}\n\
         The information of the candidates is as follows:\n",
        item.first_author_id,
        item.paper.title,
        item.paper.abstract_text,
        ids.join(", ")
    );
    for c in &item.candidates {
        p.push_str(&format!(
            "Author ID: {}\nAffiliation: {}\nWorks Count: {}\nCited By Count: {}\n\
             The top 3 research disciplines and the number of works in each discipline:\n",
            c.author_id,
            c.affiliation.as_deref().filter(|a| !a.trim().is_empty()).unwrap_or("N/A"),
            c.works_count,
            c.cited_by_count
        ));
        for (d, n) in &c.top_disciplines {
            p.push_str(&format!(" - {d}: {n}\n"));
        }
        p.push('\n');
    }
    p.push_str(
        "You should output a json, including your step-by-step reasoning process and your answer in the following format:\n\
         {\"reason\": \"your reasoning process\", \"answer\": \"author id\"}\n\
         You should only choose one collaborator from the candidates.",
    );
    p
}

/// The `answer` field of the first JSON object in the reply.
pub fn parse_collab_answer(text: &str) -> Option<String> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    let v: serde_json::Value = serde_json::from_str(text.get(start..=end)?).ok()?;
    v.get("answer")?.as_str().map(|s| s.trim().to_string())
}

/// Candidate sharing the most disciplines with the paper; ties by
/// citations, then id.
pub fn discipline_overlap_choice(item: &CollabItem) -> String {
    let paper: BTreeSet<&str> = item.paper.disciplines.iter().map(String::as_str).collect();
    item.candidates
        .iter()
        .max_by(|a, b| {
            let oa = a.top_disciplines.iter().filter(|(d, _)| paper.contains(d.as_str())).count();
            let ob = b.top_disciplines.iter().filter(|(d, _)| paper.contains(d.as_str())).count();
            oa.cmp(&ob).then(a.cited_by_count.cmp(&b.cited_by_count)).then_with(|| b.author_id.cmp(&a.author_id))
        })
        .map(|c| c.author_id.clone())
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollabPrediction {
    pub answer: String,
    pub reason: Option<String>,
    /// Set when the reply was unusable and the discipline heuristic chose.
    pub fallback: bool,
}

pub fn predict_collab(item: &CollabItem, generator: &dyn Generator) -> Result<CollabPrediction> {
    let req = GenerationRequest::new("", render_collab_prompt(item));
    let reply = generator.generate(&req)?.text;
    let reason = reply.find('{').and_then(|s| {
        let v: serde_json::Value = serde_json::from_str(reply.get(s..=reply.rfind('}')?)?).ok()?;
        v.get("reason")?.as_str().map(str::to_string)
    });
    Ok(match parse_collab_answer(&reply) {
        Some(answer) => CollabPrediction { answer, reason, fallback: false },
        None => CollabPrediction { answer: discipline_overlap_choice(item), reason: None, fallback: true },
    })
}

pub fn random_predictions(items: &[CollabItem], rng: &mut impl Rng) -> Vec<String> {
    items.iter().map(|i| i.candidates.choose(rng).map(|c| c.author_id.clone()).unwrap_or_default()).collect()
}

/// Exact-id accuracy; ids outside the candidate pool never match.
pub fn score_collab(predictions: &[String], items: &[CollabItem]) -> Result<ScoreReport> {
    if predictions.len() != items.len() {
        return Err(Error::LengthMismatch(format!("{} predictions for {} items", predictions.len(), items.len())));
    }
    let answers: Vec<&str> = items.iter().map(|i| i.positive_id.as_str()).collect();
    let preds: Vec<&str> = predictions.iter().map(String::as_str).collect();
    Ok(exact_match_accuracy(&preds, &answers)?)
}
