//! Next-paper keyword prediction: given an author's paper, pick the keyword
//! set of their following paper among ten candidate sets.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use scimem_core::text::normalize_label;
use serde::{Deserialize, Serialize};

use super::N_OPTIONS;
use crate::corpus::{Corpus, SourceDocument};
use crate::error::{Error, Result};
use crate::orchestrator::Agent;
use crate::persona::PersonaSchema;

pub const MIN_PUBLICATIONS: usize = 11;
pub const MAX_PAIRS_PER_AUTHOR: usize = 10;
pub const MIN_TRUTH_KEYWORDS: usize = 3;
pub const MAX_TRUTH_KEYWORDS: usize = 5;
pub const N_PROJECTED: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkBrief {
    pub doc_id: String,
    pub title: String,
    pub year: i32,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

impl From<&SourceDocument> for WorkBrief {
    fn from(d: &SourceDocument) -> Self {
        WorkBrief { doc_id: d.doc_id.clone(), title: d.title.clone(), year: d.year(), abstract_text: d.abstract_text.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NskpItem {
    pub author_id: String,
    pub work_t: WorkBrief,
    pub next_doc_id: String,
    pub options: Vec<Vec<String>>,
    pub answer_index: usize,
    pub truth: Vec<String>,
    /// Distractor sets taken from the global keyword pool.
    pub supplemented: usize,
}

/// Normalized, de-duplicated keywords in document order.
pub fn keywords_of(doc: &SourceDocument) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for k in &doc.keywords {
        let k = normalize_label(k);
        if !k.is_empty() && !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// Global keywords ranked by document frequency, ties alphabetical.
pub fn global_keyword_ranking(corpus: &Corpus) -> Vec<String> {
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for d in &corpus.documents {
        for k in keywords_of(d) {
            *freq.entry(k).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.into_iter().map(|(k, _)| k).collect()
}

/// Candidate distractor keyword sets for `next`: keyword sets of works in
/// the same venue and of works it cites, each with the truth keywords
/// removed and at least three keywords left. Citation sets come first.
pub fn distractor_pool(corpus: &Corpus, next: &SourceDocument, truth: &BTreeSet<String>) -> Vec<Vec<String>> {
    let mut pool: Vec<Vec<String>> = Vec::new();
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    let cited = next.cited_work_ids.iter().filter_map(|id| corpus.document(id));
    let venue = corpus
        .documents
        .iter()
        .filter(|d| d.doc_id != next.doc_id && d.venue.is_some() && d.venue == next.venue);
    for d in cited.chain(venue) {
        if d.doc_id == next.doc_id {
            continue;
        }
        let set: Vec<String> =
            keywords_of(d).into_iter().filter(|k| !truth.contains(k)).take(MAX_TRUTH_KEYWORDS).collect();
        if set.len() < MIN_TRUTH_KEYWORDS {
            continue;
        }
        let mut key = set.clone();
        key.sort();
        if seen.insert(key) {
            pool.push(set);
        }
    }
    pool
}

/// Chunks of the global ranking (truth removed), each the size of the truth set.
pub fn global_supplement(global: &[String], truth: &BTreeSet<String>, size: usize) -> Vec<Vec<String>> {
    let free: Vec<&String> = global.iter().filter(|k| !truth.contains(*k)).collect();
    free.chunks(size).filter(|c| c.len() == size).map(|c| c.iter().map(|s| s.to_string()).collect()).collect()
}

/// Up to ten disjoint consecutive pairs per eligible author; a pair is kept
/// when the later work has at least three keywords and nine distractor sets
/// can be found.
pub fn build_nskp(corpus: &Corpus, rng: &mut impl Rng) -> Vec<NskpItem> {
    let global = global_keyword_ranking(corpus);
    let mut items = Vec::new();
    for author in &corpus.authors {
        let docs = corpus.documents_of(&author.author_id);
        if docs.len() < MIN_PUBLICATIONS {
            continue;
        }
        let mut starts: Vec<usize> = (0..docs.len() - 1).collect();
        starts.shuffle(rng);
        let mut used = BTreeSet::new();
        let mut pairs = Vec::new();
        for s in starts {
            if pairs.len() == MAX_PAIRS_PER_AUTHOR {
                break;
            }
            if used.contains(&s) || used.contains(&(s + 1)) {
                continue;
            }
            used.insert(s);
            used.insert(s + 1);
            pairs.push(s);
        }
        pairs.sort_unstable();
        for s in pairs {
            if let Some(item) = build_item(corpus, &author.author_id, docs[s], docs[s + 1], &global, rng) {
                items.push(item);
            }
        }
    }
    items
}

fn build_item(
    corpus: &Corpus,
    author_id: &str,
    work_t: &SourceDocument,
    next: &SourceDocument,
    global: &[String],
    rng: &mut impl Rng,
) -> Option<NskpItem> {
    let all = keywords_of(next);
    if all.len() < MIN_TRUTH_KEYWORDS {
        return None;
    }
    let truth: Vec<String> = all.into_iter().take(MAX_TRUTH_KEYWORDS).collect();
    let truth_set: BTreeSet<String> = truth.iter().cloned().collect();
    let mut pool = distractor_pool(corpus, next, &truth_set);
    let mut distractors: Vec<Vec<String>> = if pool.len() >= N_OPTIONS - 1 {
        pool.shuffle(rng);
        pool.truncate(N_OPTIONS - 1);
        pool
    } else {
        pool
    };
    let mut supplemented = 0;
    if distractors.len() < N_OPTIONS - 1 {
        let mut seen: BTreeSet<Vec<String>> = distractors
            .iter()
            .map(|s| {
                let mut k = s.clone();
                k.sort();
                k
            })
            .collect();
        for set in global_supplement(global, &truth_set, truth.len()) {
            if distractors.len() == N_OPTIONS - 1 {
                break;
            }
            let mut k = set.clone();
            k.sort();
            if seen.insert(k) {
                distractors.push(set);
                supplemented += 1;
            }
        }
    }
    if distractors.len() < N_OPTIONS - 1 {
        return None;
    }
    distractors.shuffle(rng);
    let answer_index = rng.gen_range(0..N_OPTIONS);
    distractors.insert(answer_index, truth.clone());
    Some(NskpItem {
        author_id: author_id.to_string(),
        work_t: WorkBrief::from(work_t),
        next_doc_id: next.doc_id.clone(),
        options: distractors,
        answer_index,
        truth,
        supplemented,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectedKeywords {
    pub keywords: Vec<String>,
    /// Set when persona labels had to fill the list.
    pub padded: bool,
}

pub fn projection_question(recent: &[WorkBrief]) -> String {
    let mut q = String::from("Your recent papers:\n");
    for w in recent {
        q.push_str(&format!("- {} ({}): {}\n", w.title, w.year, w.abstract_text));
    }
    q.push_str(&format!(
        "\nList the {N_PROJECTED} keywords you are most likely to use in your next paper, one per line."
    ));
    q
}

/// Strips list markers such as `-`, `*`, `3.` or `3)` and normalizes.
pub fn parse_keyword_lines(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in text.lines() {
        let l = line.trim().trim_start_matches(['-', '*', '•']).trim_start();
        let digits = l.chars().take_while(|c| c.is_ascii_digit()).count();
        let l = if digits > 0 && l[digits..].starts_with(['.', ')']) { &l[digits + 1..] } else { l };
        let k = normalize_label(l.trim_start_matches("keyword:").trim_start_matches("Keyword:"));
        if !k.is_empty() && !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// Exactly ten keywords: the first ten parsed from the agent's reply,
/// padded with the persona's top concept labels (cycling when needed).
pub fn project_keywords(agent: &dyn Agent, persona: &PersonaSchema, recent: &[WorkBrief]) -> Result<ProjectedKeywords> {
    let reply = agent.respond(&projection_question(recent))?;
    finish_projection(parse_keyword_lines(&reply), persona)
}

pub fn finish_projection(mut keywords: Vec<String>, persona: &PersonaSchema) -> Result<ProjectedKeywords> {
    keywords.truncate(N_PROJECTED);
    let padded = keywords.len() < N_PROJECTED;
    if padded {
        let labels: Vec<String> = persona.top_nodes(N_PROJECTED).iter().map(|n| n.label.clone()).collect();
        let fill: Vec<String> = if labels.is_empty() { keywords.clone() } else { labels };
        if fill.is_empty() {
            return Err(Error::MalformedExtraction("no keywords in reply and no persona labels to pad with".into()));
        }
        // labels not yet present first, then repeats
        let fresh: Vec<String> = fill.iter().filter(|l| !keywords.contains(l)).cloned().collect();
        let mut cycle = fresh.into_iter().chain(fill.iter().cloned().cycle());
        while keywords.len() < N_PROJECTED {
            keywords.push(cycle.next().expect("cycle is infinite"));
        }
    }
    Ok(ProjectedKeywords { keywords, padded })
}

/// Options ranked by overlap with the projected keywords, ties by index.
pub fn rank_by_overlap(options: &[Vec<String>], projected: &[String]) -> Vec<usize> {
    let p: BTreeSet<&str> = projected.iter().map(String::as_str).collect();
    let mut idx: Vec<(usize, usize)> =
        options.iter().enumerate().map(|(i, o)| (o.iter().filter(|k| p.contains(k.as_str())).count(), i)).collect();
    idx.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    idx.into_iter().map(|(_, i)| i).collect()
}
