//! Author-fidelity items: concept facts (has the author worked on X?) and
//! next-paper style prediction among ten LLM-written summaries.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use scimem_core::metrics::{binary_scores, hit_rates};
use serde::{Deserialize, Serialize};

use super::{parse_ranking, ScoreReport, HIT_KS, N_OPTIONS};
use crate::corpus::{Corpus, SourceDocument};
use crate::domain::DomainBuild;
use crate::error::{Error, Result};
use crate::orchestrator::Agent;
use crate::providers::{Embedder, GenerationRequest, Generator};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SciTwinFactItem {
    pub author_id: String,
    pub concept_id: String,
    pub concept_label: String,
    pub is_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SciTwinStyleItem {
    pub author_id: String,
    pub target_doc_id: String,
    /// Most recent documents before the target, oldest first.
    pub context_doc_ids: Vec<String>,
    pub options: Vec<String>,
    pub answer_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SciTwinItem {
    Fact(SciTwinFactItem),
    Style(SciTwinStyleItem),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SciTwinPrediction {
    Fact { predicted: bool },
    Style { ranking: Vec<usize>, fallback: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SciTwinParams {
    pub n_fact: usize,
    pub n_style: usize,
    pub context: usize,
}

pub fn summary_prompt(doc: &SourceDocument) -> GenerationRequest {
    GenerationRequest::new(
        "You summarize scientific papers.",
        format!("Summarize this paper in two sentences.\n\nTitle: {}\nAbstract: {}", doc.title, doc.abstract_text),
    )
}

fn doc_text(doc: &SourceDocument) -> String {
    format!("{}. {}", doc.title, doc.abstract_text)
}

/// Fact items are balanced: half drawn from the author's concept tags, half
/// from the non-tag concepts closest to them in embedding space. Style items
/// target the author's latest `n_style` documents.
pub fn build_scitwin(
    corpus: &Corpus,
    domain: &DomainBuild,
    author_id: &str,
    params: SciTwinParams,
    generator: &dyn Generator,
    embedder: &dyn Embedder,
    rng: &mut impl Rng,
) -> Result<(Vec<SciTwinFactItem>, Vec<SciTwinStyleItem>)> {
    corpus.author(author_id).ok_or_else(|| Error::UnknownAuthor(author_id.to_string()))?;
    let docs = corpus.documents_of(author_id);
    if docs.len() < params.n_style + params.context {
        return Err(Error::InsufficientCorpus(format!(
            "{author_id} has {} documents, need {}",
            docs.len(),
            params.n_style + params.context
        )));
    }
    let facts = fact_items(&docs, domain, author_id, params.n_fact, rng)?;
    let styles = style_items(corpus, &docs, author_id, params, generator, embedder, rng)?;
    Ok((facts, styles))
}

fn fact_items(
    docs: &[&SourceDocument],
    domain: &DomainBuild,
    author_id: &str,
    n_fact: usize,
    rng: &mut impl Rng,
) -> Result<Vec<SciTwinFactItem>> {
    let graph = &domain.graph;
    let tags: BTreeSet<&str> = docs
        .iter()
        .flat_map(|d| d.concept_tags.iter().map(|(c, _)| c.as_str()))
        .filter(|c| graph.nodes.contains_key(*c))
        .collect();
    let n_pos = n_fact / 2;
    let n_neg = n_fact - n_pos;
    if tags.len() < n_pos {
        return Err(Error::InsufficientCorpus(format!("{author_id} has {} tagged concepts, need {n_pos}", tags.len())));
    }
    let tag_list: Vec<&str> = tags.iter().copied().collect();
    let positives: Vec<&str> = tag_list.choose_multiple(rng, n_pos).copied().collect();

    // nearest non-tag concepts: max cosine to any tag concept
    let vec_of = |id: &str| domain.index.entries.get(id);
    let mut candidates: Vec<(f64, &str)> = graph
        .nodes
        .keys()
        .filter(|c| !tags.contains(c.as_str()))
        .map(|c| {
            let best = tags
                .iter()
                .filter_map(|t| Some(scimem_core::cosine(vec_of(c)?, vec_of(t)?)))
                .fold(f64::NEG_INFINITY, f64::max);
            (best, c.as_str())
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    if candidates.len() < n_neg {
        return Err(Error::InsufficientCorpus(format!("only {} non-tag concepts for negatives", candidates.len())));
    }
    let mut items: Vec<SciTwinFactItem> = positives
        .iter()
        .map(|c| (c, true))
        .chain(candidates.iter().take(n_neg).map(|(_, c)| (c, false)))
        .map(|(c, is_positive)| SciTwinFactItem {
            author_id: author_id.to_string(),
            concept_id: c.to_string(),
            concept_label: graph.nodes[*c].label.clone(),
            is_positive,
        })
        .collect();
    items.shuffle(rng);
    Ok(items)
}

fn style_items(
    corpus: &Corpus,
    docs: &[&SourceDocument],
    author_id: &str,
    params: SciTwinParams,
    generator: &dyn Generator,
    embedder: &dyn Embedder,
    rng: &mut impl Rng,
) -> Result<Vec<SciTwinStyleItem>> {
    let others: Vec<&SourceDocument> = corpus.documents.iter().filter(|d| d.author_id != author_id).collect();
    if others.len() < N_OPTIONS - 1 {
        return Err(Error::InsufficientCorpus(format!("only {} documents by other authors for negatives", others.len())));
    }
    let mut other_vecs = Vec::with_capacity(others.len());
    for d in &others {
        other_vecs.push(embedder.embed(&doc_text(d))?);
    }
    let mut summaries: BTreeMap<String, String> = BTreeMap::new();
    let mut summary = |d: &SourceDocument| -> Result<String> {
        if let Some(s) = summaries.get(&d.doc_id) {
            return Ok(s.clone());
        }
        let s = generator.generate(&summary_prompt(d))?.text.trim().to_string();
        summaries.insert(d.doc_id.clone(), s.clone());
        Ok(s)
    };

    let mut items = Vec::new();
    for t in docs.len() - params.n_style..docs.len() {
        let target = docs[t];
        let context: Vec<String> = docs[t - params.context..t].iter().map(|d| d.doc_id.clone()).collect();
        let tv = embedder.embed(&doc_text(target))?;
        // hard negatives: other authors' papers closest to the target
        let mut ranked: Vec<(f64, usize)> = other_vecs.iter().enumerate().map(|(i, v)| (tv.cosine(v), i)).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| others[a.1].doc_id.cmp(&others[b.1].doc_id)));
        let mut options = Vec::with_capacity(N_OPTIONS);
        for (_, i) in ranked.into_iter().take(N_OPTIONS - 1) {
            options.push(summary(others[i])?);
        }
        options.shuffle(rng);
        let answer_index = rng.gen_range(0..N_OPTIONS);
        options.insert(answer_index, summary(target)?);
        items.push(SciTwinStyleItem {
            author_id: author_id.to_string(),
            target_doc_id: target.doc_id.clone(),
            context_doc_ids: context,
            options,
            answer_index,
        });
    }
    Ok(items)
}

pub fn fact_question(item: &SciTwinFactItem) -> String {
    format!("Have you published research on the concept \"{}\"? Answer YES or NO.", item.concept_label)
}

pub fn parse_yes_no(text: &str) -> Option<bool> {
    let first = text.trim().split(|c: char| !c.is_alphanumeric()).find(|w| !w.is_empty())?;
    match first.to_lowercase().as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

pub fn style_question(item: &SciTwinStyleItem, corpus: &Corpus) -> String {
    let mut q = String::from("Your recent papers:\n");
    for id in &item.context_doc_ids {
        if let Some(d) = corpus.document(id) {
            q.push_str(&format!("- {} ({})\n", d.title, d.year()));
        }
    }
    q.push_str("\nWhich of these summaries most likely describes your next paper?\n");
    for (i, o) in item.options.iter().enumerate() {
        q.push_str(&format!("[{i}] {o}\n"));
    }
    q.push_str("\nReply with RANKING: followed by all option numbers from most to least likely.");
    q
}

/// Asks the author agent each question. An unparseable fact reply counts as NO.
pub fn predict(item: &SciTwinItem, agent: &dyn Agent, corpus: &Corpus) -> Result<SciTwinPrediction> {
    Ok(match item {
        SciTwinItem::Fact(f) => SciTwinPrediction::Fact { predicted: parse_yes_no(&agent.respond(&fact_question(f))?).unwrap_or(false) },
        SciTwinItem::Style(s) => {
            let (ranking, fallback) = parse_ranking(&agent.respond(&style_question(s, corpus))?, s.options.len());
            SciTwinPrediction::Style { ranking, fallback }
        }
    })
}

/// Accuracy and F1 with "has worked on" as the positive class.
pub fn score_fact(predictions: &[bool], items: &[SciTwinFactItem]) -> Result<ScoreReport> {
    let truth: Vec<bool> = items.iter().map(|i| i.is_positive).collect();
    Ok(binary_scores(predictions, &truth)?)
}

/// Hit@k over permutations of the option indices.
pub fn score_ranked(rankings: &[Vec<usize>], answers: &[usize], ks: &[usize]) -> Result<ScoreReport> {
    Ok(hit_rates(rankings, answers, N_OPTIONS, ks)?)
}

pub fn score_style(rankings: &[Vec<usize>], items: &[SciTwinStyleItem]) -> Result<ScoreReport> {
    let answers: Vec<usize> = items.iter().map(|i| i.answer_index).collect();
    score_ranked(rankings, &answers, &HIT_KS)
}

/// Scores a mixed item list. Fact and style parts are scored separately and merged.
pub fn score_items(items: &[SciTwinItem], predictions: &[SciTwinPrediction]) -> Result<ScoreReport> {
    if items.len() != predictions.len() || items.is_empty() {
        return Err(Error::LengthMismatch(format!("{} predictions for {} items", predictions.len(), items.len())));
    }
    let (mut fi, mut fp, mut si, mut sp) = (vec![], vec![], vec![], vec![]);
    for (i, p) in items.iter().zip(predictions) {
        match (i, p) {
            (SciTwinItem::Fact(f), SciTwinPrediction::Fact { predicted }) => {
                fi.push(f.clone());
                fp.push(*predicted);
            }
            (SciTwinItem::Style(s), SciTwinPrediction::Style { ranking, .. }) => {
                si.push(s.clone());
                sp.push(ranking.clone());
            }
            _ => return Err(Error::LengthMismatch("prediction kind does not match item kind".into())),
        }
    }
    let mut parts = Vec::new();
    if !fi.is_empty() {
        parts.push(score_fact(&fp, &fi)?);
    }
    if !si.is_empty() {
        parts.push(score_style(&sp, &si)?);
    }
    Ok(super::merge_reports(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fact(pos: bool) -> SciTwinFactItem {
        SciTwinFactItem { author_id: "a".into(), concept_id: "c".into(), concept_label: "c".into(), is_positive: pos }
    }

    #[test]
    fn fact_scores() {
        let items: Vec<_> = [true, true, false, false].into_iter().map(fact).collect();
        let r = score_fact(&[true, true, false, false], &items).unwrap();
        assert_eq!((r.get("accuracy"), r.get("f1")), (Some(1.0), Some(1.0)));
        let r = score_fact(&[false; 4], &items).unwrap();
        assert_eq!((r.get("accuracy"), r.get("f1")), (Some(0.5), Some(0.0)));
        assert!(matches!(score_fact(&[], &[]), Err(Error::LengthMismatch(_))));
    }

    #[test]
    fn ranked_scores() {
        let r = score_ranked(&[vec![4, 0, 1, 2, 3, 5, 6, 7, 8, 9]], &[4], &HIT_KS).unwrap();
        assert_eq!((r.get("hit@1"), r.get("hit@5")), (Some(1.0), Some(1.0)));
        let r = score_ranked(&[vec![0, 1, 2, 4, 3, 5, 6, 7, 8, 9]], &[4], &HIT_KS).unwrap();
        assert_eq!((r.get("hit@1"), r.get("hit@3"), r.get("hit@5")), (Some(0.0), Some(0.0), Some(1.0)));
        assert!(matches!(score_ranked(&[vec![0, 0, 1, 2, 3, 4, 5, 6, 7, 8]], &[1], &HIT_KS), Err(Error::MalformedRanking(_))));
    }

    #[test]
    fn yes_no() {
        assert_eq!(parse_yes_no("Yes, since 2019."), Some(true));
        assert_eq!(parse_yes_no("no"), Some(false));
        assert_eq!(parse_yes_no("mock response ab"), None);
    }
}
