//! HTTP surface over author agents, domain agents and the coordinator.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::author::{self, AuthorMemory};
use crate::config::Config;
use crate::domain::{build_graph, DomainAgent, DomainBuild, DomainOptions, Snapshot};
use crate::error::{Error, Result};
use crate::orchestrator::{mas_query, AgentKind, AgentRegistry, AgentRegistryEntry, AuthorAgent};
use crate::providers::Providers;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub query: String,
    #[serde(default)]
    pub options: serde_json::Map<String, serde_json::Value>,
}

impl QueryRequest {
    pub fn new(query: impl Into<String>) -> Self {
        QueryRequest { query: query.into(), options: Default::default() }
    }

    pub fn with_option(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.options.insert(key.to_string(), value.into());
        self
    }

    fn trace(&self) -> bool {
        self.options.get("trace").and_then(|v| v.as_bool()).unwrap_or(false)
    }

    fn top_n(&self) -> Result<Option<usize>> {
        match self.options.get("top_n") {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .filter(|n| *n > 0)
                .map(|n| Some(n as usize))
                .ok_or_else(|| Error::InvalidRequest("top_n must be a positive integer".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub answer: String,
    #[serde(default)]
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<serde_json::Value>,
    pub status: ResponseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_detail: Option<String>,
}

impl QueryResponse {
    pub fn ok(answer: String, citations: Vec<String>, trace: Option<serde_json::Value>) -> Self {
        QueryResponse { answer, citations, trace, status: ResponseStatus::Ok, error_detail: None }
    }

    pub fn error(e: &Error) -> Self {
        QueryResponse {
            answer: String::new(),
            citations: Vec::new(),
            trace: None,
            status: ResponseStatus::Error,
            error_detail: Some(e.to_string()),
        }
    }
}

/// Total mapping from errors to status codes.
pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::InvalidRequest(_)
        | Error::EmptyDocument(_)
        | Error::Parse(_)
        | Error::DimensionMismatch { .. }
        | Error::LengthMismatch(_)
        | Error::MalformedRanking(_) => StatusCode::BAD_REQUEST,
        Error::UnknownAuthor(_) | Error::UnknownConcept(_) | Error::UnknownAgent(_) | Error::NoPath(..) => {
            StatusCode::NOT_FOUND
        }
        // the model answered, but not with anything usable
        Error::ProviderUnavailable(_)
        | Error::NoViablePlan(_)
        | Error::MalformedExtraction(_)
        | Error::MalformedVerdict(_) => StatusCode::BAD_GATEWAY,
        Error::Referential(_)
        | Error::DuplicateAgent(_)
        | Error::InsufficientCorpus(_)
        | Error::Config(_)
        | Error::Bind { .. }
        | Error::Io { .. }
        | Error::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

/// Immutable state shared by all handlers.
pub struct ServiceState {
    pub cfg: Arc<Config>,
    pub providers: Providers,
    pub authors: BTreeMap<String, Arc<AuthorMemory>>,
    pub domains: BTreeMap<String, Arc<DomainAgent>>,
    pub registry: AgentRegistry,
}

impl ServiceState {
    /// Loads authors from the data directory and domains from config, then
    /// builds the registry (from file when configured, otherwise one entry
    /// per loaded agent).
    pub fn from_config(cfg: Config) -> Result<Self> {
        let providers = Providers::from_config(&cfg.provider)?;
        let authors = AuthorMemory::load_all(&cfg.service.data_dir)?;
        let mut domains = BTreeMap::new();
        for (id, path) in &cfg.service.domains {
            let build = match DomainBuild::load(path) {
                Ok(b) => b,
                Err(Error::Parse(_)) => build_graph(&Snapshot::load(path)?, providers.embedder.as_ref(), &cfg.domain)?,
                Err(e) => return Err(e),
            };
            domains.insert(id.clone(), build);
        }
        Self::new(cfg, providers, authors, domains)
    }

    pub fn new(
        cfg: Config,
        providers: Providers,
        authors: BTreeMap<String, AuthorMemory>,
        domains: BTreeMap<String, DomainBuild>,
    ) -> Result<Self> {
        let cfg = Arc::new(cfg);
        let authors: BTreeMap<String, Arc<AuthorMemory>> = authors.into_iter().map(|(k, v)| (k, Arc::new(v))).collect();
        let domains: BTreeMap<String, Arc<DomainAgent>> = domains
            .into_iter()
            .map(|(id, b)| (id.clone(), Arc::new(DomainAgent::new(id, b, providers.clone(), cfg.domain.clone()))))
            .collect();
        let entries = match &cfg.service.registry {
            Some(path) => AgentRegistry::load_entries(path)?,
            None => default_entries(&authors, &domains),
        };
        let mut registry = AgentRegistry::new();
        for e in entries {
            let id = e.agent_id.clone();
            let local = e.is_local();
            let kind = e.kind;
            registry.register_agent(e)?;
            if !local {
                continue;
            }
            match kind {
                AgentKind::Author => {
                    let memory = authors
                        .get(&id)
                        .ok_or_else(|| Error::Config(format!("registry entry {id}: no author memory loaded")))?;
                    registry.attach(
                        &id,
                        Arc::new(AuthorAgent { memory: memory.clone(), providers: providers.clone(), cfg: cfg.clone() }),
                    )?;
                }
                AgentKind::Domain => {
                    let d = domains.get(&id).ok_or_else(|| Error::Config(format!("registry entry {id}: no domain loaded")))?;
                    registry.attach(&id, d.clone())?;
                }
                AgentKind::Reviewer => {
                    registry.attach(
                        &id,
                        Arc::new(crate::orchestrator::GeneratorAgent {
                            role: "You are a careful scientific reviewer.".into(),
                            generator: providers.generator.clone(),
                        }),
                    )?;
                }
            }
        }
        Ok(ServiceState { cfg, providers, authors, domains, registry })
    }
}

fn default_entries(
    authors: &BTreeMap<String, Arc<AuthorMemory>>,
    domains: &BTreeMap<String, Arc<DomainAgent>>,
) -> Vec<AgentRegistryEntry> {
    let mut out = Vec::new();
    for (id, m) in authors {
        let topics: Vec<&str> = m.persona.top_nodes(5).iter().map(|n| n.label.as_str()).collect();
        let name = if m.display_name.is_empty() { id.as_str() } else { m.display_name.as_str() };
        let capability = if topics.is_empty() {
            format!("Answers as researcher {name} from their publications.")
        } else {
            format!("Answers as researcher {name} from their publications; works on {}.", topics.join(", "))
        };
        out.push(AgentRegistryEntry::local(id.clone(), AgentKind::Author, capability));
    }
    for (id, d) in domains {
        let roots: Vec<&str> =
            d.graph().nodes.values().filter(|c| c.level == 0).take(5).map(|c| c.label.as_str()).collect();
        let capability = format!(
            "Navigates the {id} concept graph ({} concepts{}): concept search, neighbourhoods, bridging paths, expert authors.",
            d.graph().nodes.len(),
            if roots.is_empty() { String::new() } else { format!("; disciplines {}", roots.join(", ")) }
        );
        out.push(AgentRegistryEntry::local(id.clone(), AgentKind::Domain, capability));
    }
    out
}

/// Handles one routed query. `route` is `author`, `domain` or `mas`.
pub fn handle_query(state: &ServiceState, route: &str, target: Option<&str>, req: &QueryRequest) -> Result<QueryResponse> {
    if req.query.trim().is_empty() {
        return Err(Error::InvalidRequest("query is empty".into()));
    }
    let top_n = req.top_n()?;
    match route {
        "author" => {
            let id = target.unwrap_or_default();
            let memory = state.authors.get(id).ok_or_else(|| Error::UnknownAuthor(id.to_string()))?;
            let cfg = match top_n {
                Some(n) => {
                    let mut c = (*state.cfg).clone();
                    c.agent.evidence_chunks = n;
                    std::borrow::Cow::Owned(c)
                }
                None => std::borrow::Cow::Borrowed(state.cfg.as_ref()),
            };
            let a = author::answer(memory, &req.query, &state.providers, &cfg)?;
            let trace = req.trace().then(|| serde_json::to_value(&a)).transpose().map_err(internal)?;
            Ok(QueryResponse::ok(a.text, a.cited_chunk_ids, trace))
        }
        "domain" => {
            let id = target.unwrap_or_default();
            let agent = state.domains.get(id).ok_or_else(|| Error::UnknownAgent(id.to_string()))?;
            let opts: DomainOptions = serde_json::from_value(serde_json::Value::Object(req.options.clone()))
                .map_err(|e| Error::InvalidRequest(format!("options: {e}")))?;
            let reply = agent.handle(&req.query, &opts)?;
            Ok(QueryResponse::ok(reply.answer, reply.citations, req.trace().then_some(reply.data)))
        }
        "mas" => {
            let t = mas_query(&req.query, &state.registry, &state.providers, state.cfg.orchestrator.parallelism)?;
            let citations = t.plan.agent_ids().into_iter().map(str::to_string).collect();
            let trace = req.trace().then(|| serde_json::to_value(&t)).transpose().map_err(internal)?;
            Ok(QueryResponse::ok(t.answer, citations, trace))
        }
        other => Err(Error::Internal(format!("unrouted {other}"))),
    }
}

fn internal(e: serde_json::Error) -> Error {
    Error::Internal(e.to_string())
}

type Reply = (StatusCode, Json<QueryResponse>);

async fn run(
    state: Arc<ServiceState>,
    route: &'static str,
    target: Option<String>,
    body: std::result::Result<Json<QueryRequest>, JsonRejection>,
) -> Reply {
    let req = match body {
        Ok(Json(r)) => r,
        Err(rej) => {
            let e = Error::InvalidRequest(rej.body_text());
            return (status_for(&e), Json(QueryResponse::error(&e)));
        }
    };
    if state.cfg.service.debug {
        tracing::debug!(route, target = target.as_deref().unwrap_or(""), query = %req.query, "query");
    }
    let result = tokio::task::spawn_blocking(move || handle_query(&state, route, target.as_deref(), &req))
        .await
        .unwrap_or_else(|e| Err(Error::Internal(format!("handler failed: {e}"))));
    match result {
        Ok(r) => (StatusCode::OK, Json(r)),
        Err(e) => {
            tracing::warn!(route, error = %e, "query failed");
            (status_for(&e), Json(QueryResponse::error(&e)))
        }
    }
}

async fn author_query(
    State(s): State<Arc<ServiceState>>,
    UrlPath(id): UrlPath<String>,
    body: std::result::Result<Json<QueryRequest>, JsonRejection>,
) -> Reply {
    run(s, "author", Some(id), body).await
}

async fn domain_query(
    State(s): State<Arc<ServiceState>>,
    UrlPath(id): UrlPath<String>,
    body: std::result::Result<Json<QueryRequest>, JsonRejection>,
) -> Reply {
    run(s, "domain", Some(id), body).await
}

async fn mas(State(s): State<Arc<ServiceState>>, body: std::result::Result<Json<QueryRequest>, JsonRejection>) -> Reply {
    run(s, "mas", None, body).await
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn registry(State(s): State<Arc<ServiceState>>) -> Json<Vec<AgentRegistryEntry>> {
    Json(s.registry.entries().cloned().collect())
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/author/{author_id}/query", post(author_query))
        .route("/domain/{domain_id}/query", post(domain_query))
        .route("/mas/query", post(mas))
        .route("/health", get(health))
        .route("/registry", get(registry))
        .with_state(state)
}

pub async fn bind(host: &str, port: u16) -> Result<tokio::net::TcpListener> {
    let addr = format!("{host}:{port}");
    tokio::net::TcpListener::bind(&addr).await.map_err(|source| Error::Bind { addr, source })
}

/// Serves until the process is stopped.
pub async fn serve(state: ServiceState) -> Result<()> {
    let listener = bind(&state.cfg.service.host, state.cfg.service.port).await?;
    let addr: SocketAddr = listener.local_addr().map_err(|e| Error::Internal(e.to_string()))?;
    tracing::info!(%addr, authors = state.authors.len(), domains = state.domains.len(), "listening");
    axum::serve(listener, router(Arc::new(state))).await.map_err(|e| Error::Internal(e.to_string()))
}
