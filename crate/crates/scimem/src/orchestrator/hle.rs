//! Cross-domain question workflow: tag domains, extract keywords, recruit
//! expert authors through the domain graphs under fixed budgets, collect and
//! fuse their plans, then solve with the fused plan as a prefix.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use scimem_core::text::{normalize_label, split_sentences, tokenize};
use serde::{Deserialize, Serialize};

use super::Agent;
use crate::config::HleBudgets;
use crate::domain::DomainAgent;
use crate::error::{Error, Result};
use crate::providers::{GenerationRequest, Generator};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconDomain {
    pub name: String,
    pub terms: Vec<String>,
}

/// Term lists per domain. Domain order is the canonical detection order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainLexicon {
    pub domains: Vec<LexiconDomain>,
}

const DEFAULT_LEXICON: &[(&str, &[&str])] = &[
    (
        "Math",
        &[
            "theorem", "lemma", "integral", "polynomial", "prime number", "topology", "manifold", "eigenvalue",
            "matrix", "combinatorics", "group theory", "modular arithmetic", "differential equation", "proof",
            "probability", "graph coloring",
        ],
    ),
    (
        "Physics",
        &[
            "hyperfine field", "quantum", "magnetic field", "electron spin", "photon", "momentum", "relativity",
            "thermodynamics", "hamiltonian", "superconductor", "spectroscopy", "mossbauer", "wavelength",
            "particle", "magnetic moment",
        ],
    ),
    (
        "Chemistry",
        &[
            "oxidation state", "molecule", "reaction", "catalyst", "ligand", "chemical bond", "compound", "isomer",
            "stoichiometry", "redox", "solvent", "crystal structure", "coordination complex", "spin state",
        ],
    ),
    (
        "Biology",
        &[
            "protein", "gene", "cell", "enzyme", "dna", "rna", "species", "mutation", "organism", "neuron",
            "metabolism", "genome", "evolutionary",
        ],
    ),
    (
        "CS/AI",
        &[
            "algorithm", "neural network", "machine learning", "computational complexity", "compiler",
            "turing machine", "data structure", "reinforcement learning", "transformer", "language model",
            "np hard",
        ],
    ),
    (
        "Economics",
        &[
            "market", "price", "utility function", "equilibrium price", "inflation", "monetary policy",
            "game theory", "auction", "gdp", "supply and demand", "labor market",
        ],
    ),
];

impl Default for DomainLexicon {
    fn default() -> Self {
        DomainLexicon {
            domains: DEFAULT_LEXICON
                .iter()
                .map(|(n, ts)| LexiconDomain { name: n.to_string(), terms: ts.iter().map(|t| t.to_string()).collect() })
                .collect(),
        }
    }
}

impl DomainLexicon {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::Parse(format!("lexicon {}: {e}", path.display())))
    }

    /// Terms of `domain` that occur in `question`, in lexicon order.
    pub fn matched_terms(&self, question: &str, domain: &str) -> Vec<String> {
        let q = tokenize(question);
        self.domains
            .iter()
            .filter(|d| d.name == domain)
            .flat_map(|d| d.terms.iter())
            .filter(|t| contains_run(&q, &tokenize(t)))
            .cloned()
            .collect()
    }
}

fn contains_run(hay: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

/// Domains with at least one term occurring in the question as a contiguous
/// token run, in lexicon order.
pub fn detect_domains(question: &str, lexicon: &DomainLexicon) -> Vec<String> {
    let q = tokenize(question);
    lexicon
        .domains
        .iter()
        .filter(|d| d.terms.iter().any(|t| contains_run(&q, &tokenize(t))))
        .map(|d| d.name.clone())
        .collect()
}

/// Cross-domain questions involve between two and six domains.
pub fn is_cross_domain(domains: &[String]) -> bool {
    (2..=6).contains(&domains.len())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recruit {
    pub domain: String,
    pub keyword: String,
    pub concept_id: String,
    pub author_id: String,
    pub citations: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusedPlan {
    pub per_expert_plans: Vec<(String, String)>,
    pub fused_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainKeywords {
    pub domain: String,
    pub keywords: Vec<String>,
    /// True when the generator gave nothing usable and lexicon terms were used.
    pub from_lexicon: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HleOutcome {
    pub question: String,
    pub domains: Vec<String>,
    pub cross_domain: bool,
    pub keywords: Vec<DomainKeywords>,
    pub recruits: Vec<Recruit>,
    /// Recruited authors whose agent could not be built or did not answer.
    pub unavailable_authors: Vec<String>,
    pub fused_plan: FusedPlan,
    pub solver_prompt: GenerationRequest,
    pub reasoning: String,
    pub answer: String,
    pub confidence: Option<f64>,
    /// Set when no plan was available and the solver worked unaided.
    pub fallback: bool,
}

pub type AuthorFactory<'a> = dyn Fn(&str) -> Result<Arc<dyn Agent>> + Sync + 'a;

pub struct HleWorkflow<'a> {
    pub lexicon: &'a DomainLexicon,
    /// Keyed by lexicon domain name.
    pub domain_agents: &'a BTreeMap<String, Arc<DomainAgent>>,
    pub author_factory: &'a AuthorFactory<'a>,
    /// Keyword extraction and plan fusion.
    pub coordinator: &'a dyn Generator,
    pub solver: &'a dyn Generator,
    pub budgets: HleBudgets,
}

pub fn keyword_prompt(question: &str, domain: &str, n: usize) -> GenerationRequest {
    GenerationRequest::new(
        "You extract search keywords used to find expert researchers.",
        format!(
            "Question:\n{question}\n\nList at most {n} keywords for the {domain} aspects of this question, \
             one per line, each written as KEYWORD: <term>."
        ),
    )
}

pub fn parse_keywords(text: &str, n: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in text.lines() {
        let line = line.trim().trim_start_matches(['-', '*', ' ']);
        let Some(head) = line.get(..8) else { continue };
        if head.eq_ignore_ascii_case("keyword:") {
            let kw = normalize_label(&line[8..]);
            if !kw.is_empty() && !out.contains(&kw) {
                out.push(kw);
            }
        }
    }
    out.truncate(n);
    out
}

/// Walks domains, keywords, concepts and experts in that order and stops
/// adding authors once a budget is reached. Authors already recruited are
/// skipped.
pub fn recruit(keywords: &[DomainKeywords], agents: &BTreeMap<String, Arc<DomainAgent>>, b: &HleBudgets) -> Result<Vec<Recruit>> {
    let mut recruits: Vec<Recruit> = Vec::new();
    let mut seen = BTreeSet::new();
    'outer: for dk in keywords {
        let Some(agent) = agents.get(&dk.domain) else { continue };
        for kw in dk.keywords.iter().take(b.max_keywords_per_domain) {
            for (concept, _) in agent.search(kw, b.max_concepts_per_keyword)?.into_iter().take(b.max_concepts_per_keyword) {
                for (author_id, citations) in
                    agent.experts(&concept.concept_id, b.max_authors_per_concept)?.into_iter().take(b.max_authors_per_concept)
                {
                    if recruits.len() >= b.max_authors_total {
                        break 'outer;
                    }
                    if seen.insert(author_id.clone()) {
                        recruits.push(Recruit {
                            domain: dk.domain.clone(),
                            keyword: kw.clone(),
                            concept_id: concept.concept_id.clone(),
                            author_id,
                            citations,
                        });
                    }
                }
            }
        }
    }
    Ok(recruits)
}

pub fn plan_instruction(question: &str) -> String {
    format!(
        "Drawing on your most relevant papers, outline a concise step-by-step plan for solving the question below. \
         Describe the method, not the final answer.\n\nQuestion: {question}"
    )
}

/// Keeps, per plan, only sentences not already contributed by an earlier plan.
pub fn dedup_plans(plans: &[(String, String)]) -> Vec<(String, String)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (author, text) in plans {
        let fresh: Vec<&str> = split_sentences(text)
            .into_iter()
            .filter(|s| seen.insert(normalize_label(s.trim_end_matches(['.', '!', '?', ';']))))
            .collect();
        if !fresh.is_empty() {
            out.push((author.clone(), fresh.join(" ")));
        }
    }
    out
}

pub fn fusion_prompt(question: &str, plans: &[(String, String)]) -> GenerationRequest {
    let mut user = format!("Question:\n{question}\n\nExpert plans:\n");
    for (author, plan) in plans {
        user.push_str(&format!("[{author}] {plan}\n"));
    }
    user.push_str("\nSynthesize these into one cross-disciplinary reasoning plan. Keep every distinct step once.");
    GenerationRequest::new("You merge plans written by experts from different fields.", user)
}

pub fn solver_prompt(question: &str, fused: &str) -> GenerationRequest {
    let mut user = String::new();
    if !fused.trim().is_empty() {
        user.push_str(&format!("## Reference Plan\n{}\n\n", fused.trim()));
    }
    user.push_str(&format!(
        "## Question\n{question}\n\nReason step by step. End with a line `Final answer: <answer>` and a line \
         `Confidence: <0-100>%`."
    ));
    GenerationRequest::new("You are an expert problem solver.", user)
}

/// Returns `(answer, confidence in [0, 1])`. Without a `Final answer:` line
/// the last non-empty line is taken.
pub fn parse_solution(text: &str) -> (String, Option<f64>) {
    let mut answer = None;
    let mut confidence = None;
    for line in text.lines().map(str::trim) {
        let lower = line.to_lowercase();
        if let Some(i) = lower.find("final answer:") {
            answer = Some(line[i + "final answer:".len()..].trim().to_string());
        } else if let Some(i) = lower.find("confidence:") {
            let num: String = line[i + "confidence:".len()..]
                .trim()
                .chars()
                .take_while(|c| c.is_ascii_digit() || *c == '.')
                .collect();
            if let Ok(v) = num.parse::<f64>() {
                confidence = Some(if v > 1.0 { v / 100.0 } else { v }.clamp(0.0, 1.0));
            }
        }
    }
    let answer = answer.unwrap_or_else(|| text.lines().map(str::trim).rfind(|l| !l.is_empty()).unwrap_or("").to_string());
    (answer, confidence)
}

pub fn run_hle_workflow(question: &str, wf: &HleWorkflow<'_>) -> Result<HleOutcome> {
    if question.trim().is_empty() {
        return Err(Error::InvalidRequest("question is empty".into()));
    }
    let b = wf.budgets;
    let domains = detect_domains(question, wf.lexicon);

    let mut keywords = Vec::new();
    for d in &domains {
        let reply = wf.coordinator.generate(&keyword_prompt(question, d, b.max_keywords_per_domain))?;
        let mut kws = parse_keywords(&reply.text, b.max_keywords_per_domain);
        let from_lexicon = kws.is_empty();
        if from_lexicon {
            kws = wf.lexicon.matched_terms(question, d);
            kws.truncate(b.max_keywords_per_domain);
        }
        keywords.push(DomainKeywords { domain: d.clone(), keywords: kws, from_lexicon });
    }

    let recruits = recruit(&keywords, wf.domain_agents, &b)?;
    let instruction = plan_instruction(question);
    let mut raw_plans = Vec::new();
    let mut unavailable_authors = Vec::new();
    for r in &recruits {
        match (wf.author_factory)(&r.author_id).and_then(|a| a.respond(&instruction)) {
            Ok(plan) if !plan.trim().is_empty() => raw_plans.push((r.author_id.clone(), plan)),
            _ => unavailable_authors.push(r.author_id.clone()),
        }
    }
    let per_expert_plans = dedup_plans(&raw_plans);
    let fused_text = if per_expert_plans.is_empty() {
        String::new()
    } else {
        let t = wf.coordinator.generate(&fusion_prompt(question, &per_expert_plans))?.text;
        if t.trim().is_empty() {
            per_expert_plans.iter().map(|(_, p)| p.as_str()).collect::<Vec<_>>().join("\n")
        } else {
            t
        }
    };
    let fused_plan = FusedPlan { per_expert_plans, fused_text };

    let prompt = solver_prompt(question, &fused_plan.fused_text);
    let reasoning = wf.solver.generate(&prompt)?.text;
    let (answer, confidence) = parse_solution(&reasoning);
    Ok(HleOutcome {
        question: question.to_string(),
        cross_domain: is_cross_domain(&domains),
        domains,
        keywords,
        recruits,
        unavailable_authors,
        fallback: fused_plan.per_expert_plans.is_empty(),
        fused_plan,
        solver_prompt: prompt,
        reasoning,
        answer,
        confidence,
    })
}
