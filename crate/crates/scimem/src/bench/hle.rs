//! Cross-domain question answering: question filtering and answer judging.

use std::path::Path;

use scimem_core::text::normalize_label;
use serde::{Deserialize, Serialize};

pub use crate::orchestrator::hle::{detect_domains, is_cross_domain, DomainLexicon};
use crate::error::{Error, Result};
use crate::persist;
use crate::providers::{GenerationRequest, Generator};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HleQuestion {
    pub id: String,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HleItem {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub domains: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HleRecord {
    pub id: String,
    pub answer: String,
    pub confidence: Option<f64>,
    pub recruited: usize,
    pub fallback: bool,
    pub correct: bool,
}

pub fn load_questions(path: &Path) -> Result<Vec<HleQuestion>> {
    persist::read_jsonl(path)
}

/// Keeps questions touching two to six domains.
pub fn build_hle(questions: &[HleQuestion], lexicon: &DomainLexicon) -> Vec<HleItem> {
    questions
        .iter()
        .filter_map(|q| {
            let domains = detect_domains(&q.question, lexicon);
            is_cross_domain(&domains).then(|| HleItem {
                id: q.id.clone(),
                question: q.question.clone(),
                answer: q.answer.clone(),
                domains,
            })
        })
        .collect()
}

fn normalize_answer(s: &str) -> String {
    normalize_label(s.trim().trim_end_matches('.').trim_matches(['(', ')', '"', '\'']))
}

pub fn judge_prompt(generated: &str, truth: &str) -> GenerationRequest {
    GenerationRequest::new(
        "You judge whether an answer matches the reference answer.",
        format!("Reference answer: {truth}\nCandidate answer: {generated}\n\nReply with exactly CORRECT or INCORRECT."),
    )
}

/// With no judge model, normalized exact match decides.
pub fn judge_answer(generated: &str, truth: &str, judge: Option<&dyn Generator>) -> Result<bool> {
    if generated.trim().is_empty() || truth.trim().is_empty() {
        return Err(Error::InvalidRequest("judge needs a non-empty answer and ground truth".into()));
    }
    let Some(judge) = judge else {
        return Ok(normalize_answer(generated) == normalize_answer(truth));
    };
    let reply = judge.generate(&judge_prompt(generated, truth))?.text;
    let word = reply.split(|c: char| !c.is_ascii_alphabetic()).find(|w| !w.is_empty()).unwrap_or("");
    match word.to_ascii_uppercase().as_str() {
        "CORRECT" => Ok(true),
        "INCORRECT" => Ok(false),
        _ => Err(Error::MalformedVerdict(reply)),
    }
}
