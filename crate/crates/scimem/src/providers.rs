//! Text generation and embedding providers.
//!
//! Every model call in the crate goes through [`Generator`] or [`Embedder`].
//! [`MockProvider`] is a deterministic offline implementation of both;
//! [`RemoteProvider`] talks to an OpenAI-compatible HTTP API.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ProviderConfig, ProviderKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl GenerationRequest {
    pub fn new(system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> Self {
        GenerationRequest {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            max_tokens: 1024,
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.user_prompt.is_empty() {
            return Err(Error::InvalidRequest("user prompt is empty".into()));
        }
        if self.max_tokens == 0 {
            return Err(Error::InvalidRequest("max_tokens must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub provider_id: String,
    /// Set when the provider stopped early; the only case where `text` may be empty.
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        scimem_core::cosine(&self.values, &other.values)
    }
}

pub trait Generator: Send + Sync {
    fn provider_id(&self) -> &str;
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult>;
}

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
}

/// The generator/embedder pair handed to every pipeline.
#[derive(Clone)]
pub struct Providers {
    pub generator: Arc<dyn Generator>,
    pub embedder: Arc<dyn Embedder>,
}

impl Providers {
    pub fn from_mock(mock: MockProvider) -> Self {
        let mock = Arc::new(mock);
        Providers { generator: mock.clone(), embedder: mock }
    }

    pub fn from_config(config: &ProviderConfig) -> Result<Self> {
        match config.kind {
            ProviderKind::Mock => {
                let mut mock = MockProvider::new(config.dimension, config.seed);
                if let Some(path) = &config.script {
                    mock = mock.with_script_file(path)?;
                }
                Ok(Providers::from_mock(mock))
            }
            ProviderKind::Remote => {
                let remote = Arc::new(RemoteProvider::from_config(config)?);
                Ok(Providers { generator: remote.clone(), embedder: remote })
            }
        }
    }

    pub fn generate(&self, system: &str, user: &str) -> Result<String> {
        Ok(self.generator.generate(&GenerationRequest::new(system, user))?.text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedResponse {
    pub pattern: String,
    pub response: String,
}

/// Texts containing `pattern` (case-insensitive) get `weight` times a fixed
/// direction derived from `key` added to their embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingAnchor {
    pub pattern: String,
    pub key: String,
    #[serde(default = "default_anchor_weight")]
    pub weight: f64,
}

fn default_anchor_weight() -> f64 {
    4.0
}

/// On-disk form of a mock script.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub responses: Vec<ScriptedResponse>,
    #[serde(default)]
    pub anchors: Vec<EmbeddingAnchor>,
    #[serde(default)]
    pub failures: Vec<String>,
}

/// Deterministic offline provider.
///
/// Generation returns the response of the first scripted entry whose pattern
/// occurs in `system_prompt + user_prompt`, or a digest echo otherwise.
/// Embeddings hash word unigrams and bigrams into `dimension` signed buckets,
/// add any matching anchors, and L2-normalize. Temperature is ignored.
#[derive(Debug, Clone)]
pub struct MockProvider {
    id: String,
    dimension: usize,
    seed: u64,
    script: MockScript,
}

impl MockProvider {
    pub fn new(dimension: usize, seed: u64) -> Self {
        MockProvider { id: "mock".into(), dimension: dimension.max(1), seed, script: MockScript::default() }
    }

    pub fn with_response(mut self, pattern: impl Into<String>, response: impl Into<String>) -> Self {
        self.script.responses.push(ScriptedResponse { pattern: pattern.into(), response: response.into() });
        self
    }

    pub fn with_anchor(mut self, pattern: impl Into<String>, key: impl Into<String>, weight: f64) -> Self {
        self.script.anchors.push(EmbeddingAnchor { pattern: pattern.into(), key: key.into(), weight });
        self
    }

    /// Generation fails with `ProviderUnavailable` for prompts containing `pattern`.
    pub fn failing_on(mut self, pattern: impl Into<String>) -> Self {
        self.script.failures.push(pattern.into());
        self
    }

    pub fn with_script(mut self, script: MockScript) -> Self {
        self.script.responses.extend(script.responses);
        self.script.anchors.extend(script.anchors);
        self.script.failures.extend(script.failures);
        self
    }

    pub fn with_script_file(self, path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let script: MockScript =
            serde_json::from_str(&raw).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Ok(self.with_script(script))
    }

    fn hash(&self, feature: &str) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64 ^ self.seed;
        for b in feature.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        splitmix(h)
    }

    fn direction(&self, key: &str) -> Vec<f64> {
        let mut state = self.hash(key);
        let mut v: Vec<f64> = (0..self.dimension)
            .map(|_| {
                state = splitmix(state);
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect();
        scimem_core::dense::l2_normalize(&mut v);
        v
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Generator for MockProvider {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult> {
        request.validate()?;
        let prompt = format!("{}{}", request.system_prompt, request.user_prompt);
        if let Some(f) = self.script.failures.iter().find(|f| prompt.contains(f.as_str())) {
            return Err(Error::ProviderUnavailable(format!("mock scripted failure on {f:?}")));
        }
        let text = match self.script.responses.iter().find(|r| prompt.contains(r.pattern.as_str())) {
            Some(r) => r.response.clone(),
            None => {
                let digest = Sha256::digest(prompt.as_bytes());
                let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
                format!("mock response {hex}")
            }
        };
        Ok(GenerationResult { text, provider_id: self.id.clone(), truncated: false })
    }
}

impl Embedder for MockProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        if text.is_empty() {
            return Err(Error::InvalidRequest("cannot embed empty text".into()));
        }
        let lowered = text.to_lowercase();
        let words: Vec<&str> = lowered.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
        let mut v = vec![0.0; self.dimension];
        let mut add = |feature: &str, weight: f64| {
            let h = self.hash(feature);
            let idx = (h % self.dimension as u64) as usize;
            v[idx] += if h >> 63 == 0 { weight } else { -weight };
        };
        if words.is_empty() {
            add(&lowered, 1.0);
        }
        for w in &words {
            add(w, 1.0);
        }
        for pair in words.windows(2) {
            add(&format!("{} {}", pair[0], pair[1]), 0.5);
        }
        scimem_core::dense::l2_normalize(&mut v);
        for anchor in &self.script.anchors {
            if lowered.contains(&anchor.pattern.to_lowercase()) {
                for (x, d) in v.iter_mut().zip(self.direction(&anchor.key)) {
                    *x += anchor.weight * d;
                }
            }
        }
        scimem_core::dense::l2_normalize(&mut v);
        Ok(EmbeddingVector { values: v })
    }
}

/// OpenAI-compatible chat-completions and embeddings client.
pub struct RemoteProvider {
    id: String,
    endpoint: String,
    api_key: Option<String>,
    model: String,
    embedding_model: String,
    dimension: usize,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl RemoteProvider {
    pub fn from_config(config: &ProviderConfig) -> Result<Self> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| Error::Config("remote provider needs `endpoint`".into()))?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| Error::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteProvider {
            id: format!("remote:{}", config.model.as_deref().unwrap_or("default")),
            endpoint: endpoint.trim_end_matches('/').to_string(),
            api_key,
            model: config.model.clone().unwrap_or_else(|| "default".into()),
            embedding_model: config.embedding_model.clone().unwrap_or_else(|| "default".into()),
            dimension: config.dimension,
            agent,
        })
    }

    fn post<T: for<'de> Deserialize<'de>>(&self, path: &str, body: &serde_json::Value) -> Result<T> {
        let url = format!("{}{}", self.endpoint, path);
        let mut req = self.agent.post(&url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| Error::ProviderUnavailable(format!("{url}: {e}")))?;
        let status = resp.status();
        if !status.is_success() {
            let detail = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Error::ProviderUnavailable(format!("{url}: HTTP {status}: {detail}")));
        }
        resp.body_mut()
            .read_json::<T>()
            .map_err(|e| Error::ProviderUnavailable(format!("{url}: malformed response: {e}")))
    }
}

impl Generator for RemoteProvider {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult> {
        request.validate()?;
        let mut messages = Vec::new();
        if !request.system_prompt.is_empty() {
            messages.push(serde_json::json!({"role": "system", "content": request.system_prompt}));
        }
        messages.push(serde_json::json!({"role": "user", "content": request.user_prompt}));
        let body = serde_json::json!({
            "model": self.model,
            "messages": messages,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        let resp: ChatResponse = self.post("/chat/completions", &body)?;
        let choice = resp
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Error::ProviderUnavailable("response has no choices".into()))?;
        let truncated = choice.finish_reason.as_deref() == Some("length");
        let text = choice.message.content.unwrap_or_default();
        if text.is_empty() && !truncated {
            return Err(Error::ProviderUnavailable("empty completion".into()));
        }
        Ok(GenerationResult { text, provider_id: self.id.clone(), truncated })
    }
}

impl Embedder for RemoteProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        if text.is_empty() {
            return Err(Error::InvalidRequest("cannot embed empty text".into()));
        }
        let body = serde_json::json!({"model": self.embedding_model, "input": text});
        let resp: EmbeddingResponse = self.post("/embeddings", &body)?;
        let values = resp
            .data
            .into_iter()
            .next()
            .ok_or_else(|| Error::ProviderUnavailable("response has no embedding".into()))?
            .embedding;
        if values.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: values.len() });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::ProviderUnavailable("embedding has non-finite entries".into()));
        }
        Ok(EmbeddingVector { values })
    }
}
