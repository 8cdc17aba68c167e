//! Engine configuration, loaded from TOML or JSON.
//!
//! Every section has defaults, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use scimem_core::PeriodHierarchy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub provider: ProviderConfig,
    pub retrieval: RetrievalConfig,
    pub segment: SegmentConfig,
    pub periods: PeriodHierarchy,
    pub persona: PersonaConfig,
    pub agent: AgentConfig,
    pub domain: DomainConfig,
    pub orchestrator: OrchestratorConfig,
    pub bench: BenchConfig,
    pub service: ServiceConfig,
}

impl Config {
    /// Parses TOML for `.toml` files and JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.provider.dimension == 0 {
            return Err(Error::Config("provider.dimension must be positive".into()));
        }
        if self.segment.target_chars <= self.segment.overlap_chars {
            return Err(Error::Config("segment.target_chars must exceed segment.overlap_chars".into()));
        }
        if self.retrieval.k_rrf == 0 || self.retrieval.candidate_multiplier == 0 {
            return Err(Error::Config("retrieval.k_rrf and candidate_multiplier must be positive".into()));
        }
        self.periods
            .validate()
            .map_err(|e| Error::Config(format!("periods: {e}")))?;
        if self.orchestrator.parallelism == 0 {
            return Err(Error::Config("orchestrator.parallelism must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub dimension: usize,
    pub seed: u64,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    pub model: Option<String>,
    pub embedding_model: Option<String>,
    pub timeout_secs: u64,
    /// Mock only: JSON file of scripted responses, anchors and failures.
    pub script: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            dimension: 64,
            seed: 7,
            endpoint: None,
            api_key_env: None,
            model: None,
            embedding_model: None,
            timeout_secs: 120,
            script: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k_rrf: u32,
    pub k1: f64,
    pub b: f64,
    /// Per-source depth before fusion, as a multiple of `top_n`.
    pub candidate_multiplier: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { k_rrf: 60, k1: 1.2, b: 0.75, candidate_multiplier: 4 }
    }
}

impl RetrievalConfig {
    pub fn bm25(&self) -> scimem_core::Bm25Params {
        scimem_core::Bm25Params { k1: self.k1, b: self.b }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub target_chars: usize,
    pub overlap_chars: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig { target_chars: 1200, overlap_chars: 120 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersonaConfig {
    pub max_nodes: usize,
    pub max_edges: usize,
    /// Chunks per extraction prompt.
    pub batch_size: usize,
    /// Documents included in the digest used for attribute refresh.
    pub digest_documents: usize,
}

impl Default for PersonaConfig {
    fn default() -> Self {
        PersonaConfig { max_nodes: 30, max_edges: 30, batch_size: 4, digest_documents: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Period summaries scoped in stage 2.
    pub scoped_summaries: usize,
    /// Evidence chunks retrieved in stage 3.
    pub evidence_chunks: usize,
    /// Characters of each scoped summary appended to the rewritten query.
    pub snippet_chars: usize,
    /// Ask the generator to rewrite the query instead of concatenating context.
    pub generative_rewrite: bool,
    pub refusal: String,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            scoped_summaries: 3,
            evidence_chunks: 8,
            snippet_chars: 400,
            generative_rewrite: false,
            refusal: "I have no recorded work to draw on for this question, so I cannot answer it.".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    /// Abstracts aggregated into each concept's embedding text.
    pub abstracts_per_concept: usize,
    /// Minimum tag relevance for a work to count toward a concept.
    pub tag_threshold: f64,
    pub edge_cost_floor: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { abstracts_per_concept: 5, tag_threshold: 0.3, edge_cost_floor: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrchestratorConfig {
    pub parallelism: usize,
    pub hle: HleBudgets,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        OrchestratorConfig { parallelism: 4, hle: HleBudgets::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HleBudgets {
    pub max_keywords_per_domain: usize,
    pub max_concepts_per_keyword: usize,
    pub max_authors_per_concept: usize,
    pub max_authors_total: usize,
}

impl Default for HleBudgets {
    fn default() -> Self {
        HleBudgets {
            max_keywords_per_domain: 3,
            max_concepts_per_keyword: 2,
            max_authors_per_concept: 2,
            max_authors_total: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    /// Prior documents shown as context for a style item.
    pub style_context: usize,
    pub n_fact: usize,
    pub n_style: usize,
    /// Negatives per collaborator item: 10 or 30.
    pub collab_negatives: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { seed: 42, style_context: 5, n_fact: 8, n_style: 8, collab_negatives: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub registry: Option<PathBuf>,
    pub data_dir: PathBuf,
    pub corpus: Option<PathBuf>,
    /// Domain snapshots served under `/domain/{id}`, keyed by domain id.
    pub domains: std::collections::BTreeMap<String, PathBuf>,
    pub debug: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            registry: None,
            data_dir: PathBuf::from("data"),
            corpus: None,
            domains: Default::default(),
            debug: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_default() {
        let cfg: Config = toml::from_str("").unwrap();
        assert_eq!(cfg, Config::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn provider_block_parses_from_both_formats() {
        let t: Config = toml::from_str(
            "[provider]\nkind = \"remote\"\ndimension = 1024\nseed = 1\nendpoint = \"http://x\"\napi_key_env = \"KEY\"\n",
        )
        .unwrap();
        let j: Config = serde_json::from_str(
            r#"{"provider": {"kind": "remote", "dimension": 1024, "seed": 1, "endpoint": "http://x", "api_key_env": "KEY"}}"#,
        )
        .unwrap();
        assert_eq!(t, j);
        assert_eq!(t.provider.kind, ProviderKind::Remote);
    }

    #[test]
    fn daily_hierarchy_is_configurable() {
        let cfg: Config = toml::from_str(
            "[periods]\nl1 = { kind = \"day\" }\nl2 = { kind = \"month\" }\nl3 = { kind = \"year\" }\n",
        )
        .unwrap();
        assert_eq!(cfg.periods, PeriodHierarchy::daily());
    }

    #[test]
    fn bad_segment_budget_rejected() {
        let mut cfg = Config::default();
        cfg.segment.overlap_chars = cfg.segment.target_chars;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(toml::from_str::<Config>("[provider]\nflavor = 1\n").is_err());
    }
}
