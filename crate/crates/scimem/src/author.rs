//! Author agent: builds an author's memory and answers queries through the
//! four-stage workflow (persona, semantic scoping, hybrid retrieval, assembly).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use scimem_core::PeriodKey;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::corpus::{segment_document, Chunk, Corpus};
use crate::episodic::{index_chunks, retrieve, EpisodicIndex};
use crate::error::{Error, Result};
use crate::persist;
use crate::persona::{serialize_to_system_prompt, update_attributes, update_graph, PersonaSchema};
use crate::providers::{GenerationRequest, Providers};
use crate::semantic::{run_distillation, semantic_scope, DistillationState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorMemory {
    pub author_id: String,
    #[serde(default)]
    pub display_name: String,
    pub episodic: EpisodicIndex,
    pub semantic: DistillationState,
    pub persona: PersonaSchema,
    /// Extraction lines that could not be parsed while building the persona.
    #[serde(default)]
    pub persona_malformed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedQuery {
    pub original: String,
    pub semantic_context: Vec<String>,
    pub rewritten: String,
}

pub const PERSONA_SECTION: &str = "## Persona";
pub const SEMANTIC_SECTION: &str = "## Research Trajectory";
pub const EPISODIC_SECTION: &str = "## Evidence";
pub const QUESTION_SECTION: &str = "## Question";

/// The composite prompt. Sections always render in the order persona,
/// semantic context, episodic evidence, question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledPrompt {
    pub system: String,
    pub semantic_context: String,
    pub episodic_evidence: String,
    pub question: String,
}

impl AssembledPrompt {
    /// Everything after the system prompt.
    pub fn user_prompt(&self) -> String {
        format!(
            "{SEMANTIC_SECTION}\n{}\n\n{EPISODIC_SECTION}\n{}\n\n{QUESTION_SECTION}\n{}\n\n\
             Answer in your own voice, citing evidence ids in square brackets where relevant.",
            self.semantic_context.trim_end(),
            self.episodic_evidence.trim_end(),
            self.question
        )
    }

    pub fn render(&self) -> String {
        format!("{PERSONA_SECTION}\n{}\n\n{}", self.system.trim_end(), self.user_prompt())
    }

    pub fn request(&self) -> GenerationRequest {
        GenerationRequest::new(self.system.clone(), self.user_prompt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorAnswer {
    pub text: String,
    pub cited_chunk_ids: Vec<String>,
    pub semantic_keys_used: Vec<PeriodKey>,
    /// Set when the memory was empty and the configured refusal was returned.
    #[serde(default)]
    pub refused: bool,
    pub augmented: AugmentedQuery,
    pub prompt: Option<AssembledPrompt>,
}

/// Segments, indexes, distills and profiles one author's documents.
pub fn build_memory(corpus: &Corpus, author_id: &str, providers: &Providers, cfg: &Config) -> Result<AuthorMemory> {
    let author = corpus.author(author_id).ok_or_else(|| Error::UnknownAuthor(author_id.to_string()))?;
    let docs = corpus.documents_of(author_id);
    if docs.is_empty() {
        return Err(Error::InsufficientCorpus(format!("author {author_id} has no documents")));
    }
    let mut chunks: Vec<Chunk> = Vec::new();
    for d in &docs {
        chunks.extend(segment_document(d, cfg.segment.target_chars, cfg.segment.overlap_chars)?);
    }
    let episodic = index_chunks(&chunks, providers.embedder.as_ref(), cfg.retrieval.bm25())?;
    let semantic = run_distillation(
        &DistillationState::default(),
        &chunks,
        &episodic.chunks,
        providers,
        &cfg.periods,
        cfg.orchestrator.parallelism,
    )?;
    let graph = update_graph(&PersonaSchema::default(), &chunks, providers.generator.as_ref(), cfg.persona.batch_size)?;
    let mut persona = graph.schema;
    let as_of = docs.iter().map(|d| d.timestamp).max().expect("non-empty");
    let digest = corpus_digest(&docs, cfg.persona.digest_documents);
    match update_attributes(&persona, &digest, providers.generator.as_ref(), cfg.persona.max_nodes, as_of) {
        Ok(a) => persona.attributes = a,
        // An unusable analysis leaves the attributes empty rather than failing the build.
        Err(Error::MalformedExtraction(_) | Error::InvalidRequest(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(AuthorMemory {
        author_id: author_id.to_string(),
        display_name: author.display_name.clone(),
        episodic,
        semantic,
        persona,
        persona_malformed: graph.malformed,
    })
}

/// Most recent documents first, one line each.
pub fn corpus_digest(docs: &[&crate::corpus::SourceDocument], limit: usize) -> String {
    docs.iter()
        .rev()
        .take(limit)
        .map(|d| format!("- ({}) {}: {}", d.year(), d.title.trim(), truncate_chars(d.abstract_text.trim(), 300)))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn truncate_chars(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

impl AuthorMemory {
    pub fn latest_date(&self) -> Option<NaiveDate> {
        self.episodic.chunks.values().map(|c| c.timestamp).max()
    }

    pub fn system_prompt(&self, cfg: &Config) -> String {
        serialize_to_system_prompt(&self.persona, cfg.persona.max_nodes, cfg.persona.max_edges)
    }

    pub fn dir_for(root: &Path, author_id: &str) -> PathBuf {
        root.join("authors").join(persist::safe_file_stem(author_id))
    }

    /// Writes `episodic.json`, `semantic.json`, `persona.json` and `author.json`
    /// under `<root>/authors/<author>/`.
    pub fn save(&self, root: &Path) -> Result<PathBuf> {
        let dir = Self::dir_for(root, &self.author_id);
        self.episodic.save(&dir.join("episodic.json"))?;
        self.semantic.save(&dir.join("semantic.json"))?;
        self.persona.save(&dir.join("persona.json"))?;
        let meta = AuthorMeta {
            author_id: self.author_id.clone(),
            display_name: self.display_name.clone(),
            persona_malformed: self.persona_malformed,
        };
        persist::save(&dir.join("author.json"), "author_meta", &meta)?;
        Ok(dir)
    }

    pub fn load(root: &Path, author_id: &str) -> Result<Self> {
        let dir = Self::dir_for(root, author_id);
        if !dir.join("author.json").exists() {
            return Err(Error::UnknownAuthor(author_id.to_string()));
        }
        Self::load_dir(&dir)
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let meta: AuthorMeta = persist::load(&dir.join("author.json"), "author_meta")?;
        Ok(AuthorMemory {
            author_id: meta.author_id,
            display_name: meta.display_name,
            episodic: EpisodicIndex::load(&dir.join("episodic.json"))?,
            semantic: DistillationState::load(&dir.join("semantic.json"))?,
            persona: PersonaSchema::load(&dir.join("persona.json"))?,
            persona_malformed: meta.persona_malformed,
        })
    }

    /// Every saved author memory under `root`.
    pub fn load_all(root: &Path) -> Result<BTreeMap<String, AuthorMemory>> {
        let mut out = BTreeMap::new();
        let dir = root.join("authors");
        if !dir.exists() {
            return Ok(out);
        }
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for p in paths.into_iter().filter(|p| p.join("author.json").exists()) {
            let m = Self::load_dir(&p)?;
            out.insert(m.author_id.clone(), m);
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct AuthorMeta {
    author_id: String,
    display_name: String,
    persona_malformed: usize,
}

fn rewrite_query(original: &str, snippets: &[String], providers: &Providers, cfg: &Config) -> Result<String> {
    if snippets.is_empty() {
        return Ok(original.to_string());
    }
    if cfg.agent.generative_rewrite {
        let req = GenerationRequest::new(
            "You rewrite search queries for a researcher's personal archive.",
            format!(
                "Rewrite the query so it also names the relevant topics from the context.\n\nQuery: {original}\n\nContext:\n{}",
                snippets.join("\n")
            ),
        );
        let extra = providers.generator.generate(&req)?.text;
        return Ok(format!("{original}\n{}", extra.trim()));
    }
    Ok(format!("{original}\nContext: {}", snippets.join(" | ")))
}

/// Runs the four-stage workflow over committed memory.
pub fn answer(memory: &AuthorMemory, query: &str, providers: &Providers, cfg: &Config) -> Result<AuthorAnswer> {
    if query.trim().is_empty() {
        return Err(Error::InvalidRequest("query is empty".into()));
    }
    let original = query.to_string();
    if memory.episodic.is_empty() {
        return Ok(AuthorAnswer {
            text: cfg.agent.refusal.clone(),
            cited_chunk_ids: Vec::new(),
            semantic_keys_used: Vec::new(),
            refused: true,
            augmented: AugmentedQuery { original: original.clone(), semantic_context: Vec::new(), rewritten: original },
            prompt: None,
        });
    }

    // Stage 1
    let system = memory.system_prompt(cfg);

    // Stage 2
    let scoped = semantic_scope(&memory.semantic, query, providers.embedder.as_ref(), cfg.agent.scoped_summaries)?;
    let semantic_context: Vec<String> = scoped.iter().map(|(s, _)| s.text.clone()).collect();
    let snippets: Vec<String> =
        semantic_context.iter().map(|t| truncate_chars(t.trim(), cfg.agent.snippet_chars).to_string()).collect();

    // Stage 3
    let rewritten = rewrite_query(query, &snippets, providers, cfg)?;
    let fused = retrieve(&memory.episodic, providers.embedder.as_ref(), &rewritten, cfg.agent.evidence_chunks, &cfg.retrieval)?;
    let cited_chunk_ids: Vec<String> = fused.ids().map(str::to_string).collect();

    // Stage 4
    let semantic_block: String = scoped
        .iter()
        .map(|(s, _)| format!("[{} {}..{}] {}\n", level_name(s.key.level), s.key.span_start, s.key.span_end, s.text.trim()))
        .collect();
    let evidence_block: String = cited_chunk_ids
        .iter()
        .map(|id| {
            let c = &memory.episodic.chunks[id];
            format!("[{} | {}] {}\n", c.chunk_id, c.timestamp, c.text.trim())
        })
        .collect();
    let prompt = AssembledPrompt {
        system,
        semantic_context: semantic_block,
        episodic_evidence: evidence_block,
        question: original.clone(),
    };
    let text = providers.generator.generate(&prompt.request())?.text;
    Ok(AuthorAnswer {
        text,
        cited_chunk_ids,
        semantic_keys_used: scoped.iter().map(|(s, _)| s.key).collect(),
        refused: false,
        augmented: AugmentedQuery { original, semantic_context, rewritten },
        prompt: Some(prompt),
    })
}

fn level_name(level: scimem_core::PeriodLevel) -> &'static str {
    match level {
        scimem_core::PeriodLevel::L1 => "L1",
        scimem_core::PeriodLevel::L2 => "L2",
        scimem_core::PeriodLevel::L3 => "L3",
    }
}
