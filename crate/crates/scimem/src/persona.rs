//! Persona schema: an author concept graph plus reasoning and style
//! attributes, serialized into a system prompt.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use scimem_core::text::normalize_label;
use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::error::{Error, Result};
use crate::persist;
use crate::providers::{GenerationRequest, Generator};

const KIND: &str = "persona_schema";

pub const REASONING_HEADING: &str = "Reasoning Pattern";
pub const STYLE_HEADING: &str = "Stylistic Profile";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaConceptNode {
    pub label: String,
    pub weight: u32,
    pub first_seen: NaiveDate,
    pub last_seen: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaEdge {
    pub src: String,
    pub dst: String,
    pub relation: String,
    pub weight: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaAttributes {
    pub reasoning_pattern: String,
    pub stylistic_profile: String,
    pub updated_at: Option<NaiveDate>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaSchema {
    /// Keyed by normalized label.
    pub nodes: BTreeMap<String, PersonaConceptNode>,
    /// Sorted by `(src, dst, relation)`; that triple identifies an edge.
    pub edges: Vec<PersonaEdge>,
    pub attributes: PersonaAttributes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub src: String,
    pub dst: String,
    pub relation: String,
}

/// Outcome of [`update_graph`].
#[derive(Debug, Clone, PartialEq)]
pub struct GraphUpdate {
    pub schema: PersonaSchema,
    /// Lines that could not be read as a valid triple.
    pub malformed: usize,
}

impl PersonaSchema {
    pub fn save(&self, path: &Path) -> Result<()> {
        persist::save(path, KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        persist::load(path, KIND)
    }

    fn touch_node(&mut self, label: &str, date: NaiveDate) {
        self.nodes
            .entry(label.to_string())
            .and_modify(|n| {
                n.weight += 1;
                n.first_seen = n.first_seen.min(date);
                n.last_seen = n.last_seen.max(date);
            })
            .or_insert(PersonaConceptNode { label: label.to_string(), weight: 1, first_seen: date, last_seen: date });
    }

    /// Applies the merge rule for one valid triple.
    pub fn merge_triple(&mut self, t: &Triple, date: NaiveDate) {
        self.touch_node(&t.src, date);
        self.touch_node(&t.dst, date);
        let key = (t.src.as_str(), t.dst.as_str(), t.relation.as_str());
        match self.edges.binary_search_by(|e| (e.src.as_str(), e.dst.as_str(), e.relation.as_str()).cmp(&key)) {
            Ok(i) => self.edges[i].weight += 1,
            Err(i) => self.edges.insert(
                i,
                PersonaEdge { src: t.src.clone(), dst: t.dst.clone(), relation: t.relation.clone(), weight: 1 },
            ),
        }
    }

    /// Node labels by weight descending, then label.
    pub fn top_nodes(&self, k: usize) -> Vec<&PersonaConceptNode> {
        let mut v: Vec<&PersonaConceptNode> = self.nodes.values().collect();
        v.sort_by(|a, b| b.weight.cmp(&a.weight).then_with(|| a.label.cmp(&b.label)));
        v.truncate(k);
        v
    }

    pub fn top_edges(&self, k: usize) -> Vec<&PersonaEdge> {
        let mut v: Vec<&PersonaEdge> = self.edges.iter().collect();
        v.sort_by(|a, b| {
            b.weight
                .cmp(&a.weight)
                .then_with(|| (&a.src, &a.dst, &a.relation).cmp(&(&b.src, &b.dst, &b.relation)))
        });
        v.truncate(k);
        v
    }
}

/// Parses one `concept | concept | relation` line. Leading list markers are
/// ignored. Returns `None` for anything that is not a valid triple,
/// including self-loops after normalization.
pub fn parse_triple(line: &str) -> Option<Triple> {
    let line = line.trim().trim_start_matches(['-', '*', '•']).trim();
    let parts: Vec<&str> = line.split('|').collect();
    if parts.len() != 3 {
        return None;
    }
    let (src, dst, relation) = (normalize_label(parts[0]), normalize_label(parts[1]), normalize_label(parts[2]));
    if src.is_empty() || dst.is_empty() || relation.is_empty() || src == dst {
        return None;
    }
    Some(Triple { src, dst, relation })
}

pub fn extraction_prompt(chunks: &[&Chunk]) -> GenerationRequest {
    let mut user = String::from(
        "Identify the core scientific concepts in the passages below and how they are linked. \
         Output one link per line in the form `concept | concept | relation`, and nothing else.\n\n",
    );
    for c in chunks {
        user.push_str(&format!("[{} | {}] {}\n", c.chunk_id, c.timestamp, c.text.trim()));
    }
    GenerationRequest::new("You map a researcher's conceptual landscape from their writing.", user)
}

/// Stage I: extracts triples from `new_chunks` in chronological batches and
/// merges them. Nothing is ever removed. On a provider error the caller's
/// schema is unaffected.
pub fn update_graph(
    schema: &PersonaSchema,
    new_chunks: &[Chunk],
    generator: &dyn Generator,
    batch_size: usize,
) -> Result<GraphUpdate> {
    let mut sorted: Vec<&Chunk> = new_chunks.iter().collect();
    sorted.sort_by(|a, b| {
        (a.timestamp, &a.source_document, a.ordinal).cmp(&(b.timestamp, &b.source_document, b.ordinal))
    });
    let mut next = schema.clone();
    let mut malformed = 0;
    for batch in sorted.chunks(batch_size.max(1)) {
        let date = batch.iter().map(|c| c.timestamp).max().expect("non-empty batch");
        let out = generator.generate(&extraction_prompt(batch))?;
        for line in out.text.lines().filter(|l| !l.trim().is_empty()) {
            match parse_triple(line) {
                Some(t) => next.merge_triple(&t, date),
                None => malformed += 1,
            }
        }
    }
    Ok(GraphUpdate { schema: next, malformed })
}

pub fn attributes_prompt(schema: &PersonaSchema, corpus_digest: &str, max_nodes: usize) -> GenerationRequest {
    let concepts: Vec<String> =
        schema.top_nodes(max_nodes).iter().map(|n| format!("{} ({})", n.label, n.weight)).collect();
    let user = format!(
        "Concepts this researcher works with, by frequency: {}\n\n\
         Representative publications:\n{}\n\n\
         Describe how this researcher reasons and how they write. Answer under exactly two headings:\n\
         ## {REASONING_HEADING}\n<how they frame problems, choose methods and argue>\n\
         ## {STYLE_HEADING}\n<tone, structure and vocabulary of their writing>",
        concepts.join(", "),
        corpus_digest.trim()
    );
    GenerationRequest::new("You analyze researchers' thinking and writing habits.", user)
}

fn heading_of(line: &str) -> Option<(&'static str, &str)> {
    let stripped = line.trim().trim_start_matches('#').trim().trim_start_matches("**").trim();
    for h in [REASONING_HEADING, STYLE_HEADING] {
        if stripped.get(..h.len()).is_some_and(|p| p.eq_ignore_ascii_case(h)) {
            let rest = stripped[h.len()..].trim_start_matches("**").trim_start_matches(':').trim_start_matches("**");
            return Some((h, rest.trim()));
        }
    }
    None
}

/// Splits generator output into the two attribute sections.
pub fn parse_attributes(text: &str) -> Option<(String, String)> {
    let mut sections: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut current: Option<&str> = None;
    for line in text.lines() {
        if let Some((h, rest)) = heading_of(line) {
            current = Some(h);
            let body = sections.entry(h).or_default();
            if !rest.is_empty() {
                body.push(rest);
            }
        } else if let Some(h) = current {
            sections.entry(h).or_default().push(line);
        }
    }
    let body = |h: &str| sections.get(h).map(|ls| ls.join("\n").trim().to_string()).filter(|s| !s.is_empty());
    Some((body(REASONING_HEADING)?, body(STYLE_HEADING)?))
}

/// Stage II: regenerates the attributes. `as_of` stamps `updated_at`.
pub fn update_attributes(
    schema: &PersonaSchema,
    corpus_digest: &str,
    generator: &dyn Generator,
    max_nodes: usize,
    as_of: NaiveDate,
) -> Result<PersonaAttributes> {
    if schema.nodes.is_empty() {
        return Err(Error::InvalidRequest("persona graph is empty".into()));
    }
    let out = generator.generate(&attributes_prompt(schema, corpus_digest, max_nodes))?;
    let (reasoning_pattern, stylistic_profile) = parse_attributes(&out.text).ok_or_else(|| {
        Error::MalformedExtraction(format!("expected '{REASONING_HEADING}' and '{STYLE_HEADING}' sections"))
    })?;
    Ok(PersonaAttributes { reasoning_pattern, stylistic_profile, updated_at: Some(as_of) })
}

/// Deterministic system prompt: attributes, then the top `max_nodes`
/// concepts and top `max_edges` links.
pub fn serialize_to_system_prompt(schema: &PersonaSchema, max_nodes: usize, max_edges: usize) -> String {
    let mut out = String::from(
        "You are a digital twin of the researcher described below. Answer as they would, \
         grounded in their documented work, reasoning habits and voice.\n",
    );
    out.push_str(&format!("\n## {REASONING_HEADING}\n{}\n", schema.attributes.reasoning_pattern));
    out.push_str(&format!("\n## {STYLE_HEADING}\n{}\n", schema.attributes.stylistic_profile));
    out.push_str("\n## Core Concepts\n");
    for n in schema.top_nodes(max_nodes) {
        out.push_str(&format!("- {} (weight {}, {} to {})\n", n.label, n.weight, n.first_seen, n.last_seen));
    }
    out.push_str("\n## Concept Links\n");
    for e in schema.top_edges(max_edges) {
        out.push_str(&format!("- {} --{}--> {} (weight {})\n", e.src, e.relation, e.dst, e.weight));
    }
    out
}
