//! Complementary research ideas: shortest keyword paths between two
//! projected keywords, scored for non-obviousness by the author agent and for
//! feasibility by an objective model.

use std::collections::BTreeMap;

use scimem_core::cooccur::CooccurrenceGraph;
use scimem_core::ideas::{combined_score, ScoredPath, SCALE_MAX, SCALE_MIN};
use scimem_core::text::normalize_label;
use serde::{Deserialize, Serialize};

use crate::corpus::SourceDocument;
use crate::error::{Error, Result};
use crate::orchestrator::Agent;
use crate::providers::{GenerationRequest, Generator};

pub const DEFAULT_K_PATHS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementaryIdea {
    pub keyword_pair: (String, String),
    pub path: Vec<String>,
    pub obviousness: u8,
    pub feasibility: u8,
    pub combined: f64,
    /// Literature summary per step of the path.
    pub step_summaries: Vec<String>,
    /// Set when a score reply could not be parsed and the minimum was used.
    pub score_fallback: bool,
}

/// Titles of the documents in which each keyword pair co-occurs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeywordLiterature {
    pub titles: BTreeMap<(String, String), Vec<String>>,
}

impl KeywordLiterature {
    pub fn from_documents(docs: &[&SourceDocument]) -> Self {
        let mut titles: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
        for d in docs {
            let mut kws: Vec<String> = d.keywords.iter().map(|k| normalize_label(k)).filter(|k| !k.is_empty()).collect();
            kws.sort();
            kws.dedup();
            for (i, a) in kws.iter().enumerate() {
                for b in &kws[i + 1..] {
                    titles.entry((a.clone(), b.clone())).or_default().push(d.title.clone());
                }
            }
        }
        KeywordLiterature { titles }
    }

    pub fn between(&self, a: &str, b: &str) -> &[String] {
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.titles.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn build_cooccurrence_graph(docs: &[&SourceDocument]) -> CooccurrenceGraph {
    CooccurrenceGraph::build(docs.iter().map(|d| d.keywords.iter()))
}

/// First integer on the scale after `SCORE:` (or anywhere when the marker is missing).
pub fn parse_score(text: &str) -> Option<u8> {
    let upper = text.to_uppercase();
    let body = upper.find("SCORE:").map_or(text, |i| &text[i + "SCORE:".len()..]);
    body.split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .filter_map(|s| s.parse::<u8>().ok())
        .find(|v| (SCALE_MIN..=SCALE_MAX).contains(v))
}

pub fn obviousness_question(path: &[String]) -> String {
    format!(
        "Consider a research idea that connects these topics in order: {}.\nHow obvious is this idea to you, on a scale \
         of 1=Fully obvious to 5=Not obvious? Reply with SCORE: <1-5>.",
        path.join(" -> ")
    )
}

pub fn step_summary_prompt(a: &str, b: &str, titles: &[String]) -> GenerationRequest {
    let list = if titles.is_empty() { "(none found)".to_string() } else { titles.join("\n") };
    GenerationRequest::new(
        "You summarize research literature objectively.",
        format!("Summarize in one sentence what the literature says about combining {a} and {b}.\n\nPapers:\n{list}"),
    )
}

pub fn feasibility_prompt(path: &[String], summaries: &[String]) -> GenerationRequest {
    let mut steps = String::new();
    for (i, s) in summaries.iter().enumerate() {
        steps.push_str(&format!("{} -> {}: {}\n", path[i], path[i + 1], s.trim()));
    }
    GenerationRequest::new(
        "You are an objective reviewer of research proposals.",
        format!(
            "Research idea path: {}\n\nLiterature per step:\n{steps}\nHow feasible is this idea, on a scale of \
             1=Not feasible to 5=Fully feasible? Reply with SCORE: <1-5>.",
            path.join(" -> ")
        ),
    )
}

/// Scores the `k_paths` shortest paths between the pair and ranks them by
/// the combined score, ties by path.
pub fn propose_complementary(
    author: &dyn Agent,
    graph: &CooccurrenceGraph,
    literature: &KeywordLiterature,
    objective: &dyn Generator,
    pair: (&str, &str),
    k_paths: usize,
) -> Result<Vec<ComplementaryIdea>> {
    let (kw1, kw2) = (normalize_label(pair.0), normalize_label(pair.1));
    let paths = graph
        .shortest_paths(&kw1, &kw2, k_paths)
        .ok_or_else(|| Error::InvalidRequest(format!("keyword pair ({kw1}, {kw2}) is not in the co-occurrence graph")))?;
    if paths.is_empty() {
        return Err(Error::NoPath(kw1, kw2));
    }
    let mut ideas = Vec::with_capacity(paths.len());
    for p in paths {
        let path = p.keywords;
        let obv = parse_score(&author.respond(&obviousness_question(&path))?);
        let mut summaries = Vec::with_capacity(path.len().saturating_sub(1));
        for w in path.windows(2) {
            let req = step_summary_prompt(&w[0], &w[1], literature.between(&w[0], &w[1]));
            summaries.push(objective.generate(&req)?.text);
        }
        let feas = parse_score(&objective.generate(&feasibility_prompt(&path, &summaries))?.text);
        let (o, f) = (obv.unwrap_or(SCALE_MIN), feas.unwrap_or(SCALE_MIN));
        ideas.push(ComplementaryIdea {
            keyword_pair: (kw1.clone(), kw2.clone()),
            path,
            obviousness: o,
            feasibility: f,
            combined: combined_score(o, f),
            step_summaries: summaries,
            score_fallback: obv.is_none() || feas.is_none(),
        });
    }
    Ok(rank_ideas(ideas))
}

/// Combined score descending, then path ascending.
pub fn rank_ideas(ideas: Vec<ComplementaryIdea>) -> Vec<ComplementaryIdea> {
    let scored: Vec<ScoredPath> = ideas
        .iter()
        .map(|i| ScoredPath { path: i.path.clone(), obviousness: i.obviousness, feasibility: i.feasibility })
        .collect();
    let order = scimem_core::ideas::rank_paths(scored);
    let mut by_path: BTreeMap<Vec<String>, ComplementaryIdea> = ideas.into_iter().map(|i| (i.path.clone(), i)).collect();
    order.into_iter().filter_map(|s| by_path.remove(&s.path)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_parsing() {
        assert_eq!(parse_score("SCORE: 4"), Some(4));
        assert_eq!(parse_score("I'd say 9, no, 3"), Some(3));
        assert_eq!(parse_score("mock response ff"), None);
    }

    #[test]
    fn literature_lookup() {
        let d = SourceDocument {
            doc_id: "d".into(),
            author_id: "a".into(),
            title: "T".into(),
            abstract_text: String::new(),
            full_text: None,
            timestamp: "2020-01-01".parse().unwrap(),
            venue: None,
            keywords: vec!["B".into(), "a".into()],
            concept_tags: vec![],
            cited_work_ids: vec![],
            cited_by_count: 0,
        };
        let lit = KeywordLiterature::from_documents(&[&d]);
        assert_eq!(lit.between("b", "a"), ["T".to_string()]);
        assert_eq!(build_cooccurrence_graph(&[&d]).weight("a", "b"), 1);
    }
}
