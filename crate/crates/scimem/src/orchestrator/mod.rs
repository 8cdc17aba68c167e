//! Coordinator: agent registry, task decomposition, dependency-aware
//! dispatch, review (fact and consistency checks) and integration.

pub mod hle;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::AssertUnwindSafe;
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use scimem_core::text::{normalize_label, split_sentences};
use serde::{Deserialize, Serialize};

use crate::author::{self, AuthorMemory};
use crate::config::Config;
use crate::domain::DomainAgent;
use crate::error::{Error, Result};
use crate::providers::{GenerationRequest, Generator, Providers};

pub use hle::{detect_domains, run_hle_workflow, DomainLexicon, FusedPlan, HleOutcome, HleWorkflow, Recruit};

/// Prefix of the text of an output whose agent failed.
pub const ERROR_MARKER: &str = "[agent error]";
pub const COMPETING_VIEWPOINTS: &str = "## Competing Viewpoints";

/// Anything the coordinator can hand an instruction to.
pub trait Agent: Send + Sync {
    fn respond(&self, instruction: &str) -> Result<String>;
}

/// In-process author agent.
pub struct AuthorAgent {
    pub memory: Arc<AuthorMemory>,
    pub providers: Providers,
    pub cfg: Arc<Config>,
}

impl Agent for AuthorAgent {
    fn respond(&self, instruction: &str) -> Result<String> {
        Ok(author::answer(&self.memory, instruction, &self.providers, &self.cfg)?.text)
    }
}

impl Agent for DomainAgent {
    fn respond(&self, instruction: &str) -> Result<String> {
        DomainAgent::respond(self, instruction)
    }
}

/// Plain generator wrapped as an agent, used for reviewer entries.
pub struct GeneratorAgent {
    pub role: String,
    pub generator: Arc<dyn Generator>,
}

impl Agent for GeneratorAgent {
    fn respond(&self, instruction: &str) -> Result<String> {
        Ok(self.generator.generate(&GenerationRequest::new(self.role.clone(), instruction))?.text)
    }
}

/// Remote agent behind a query endpoint speaking `{query} -> {answer, status}`.
pub struct HttpAgent {
    url: String,
    agent: ureq::Agent,
}

impl HttpAgent {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        HttpAgent { url: url.into(), agent }
    }
}

impl Agent for HttpAgent {
    fn respond(&self, instruction: &str) -> Result<String> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(serde_json::json!({ "query": instruction }))
            .map_err(|e| Error::ProviderUnavailable(format!("{}: {e}", self.url)))?;
        let status = resp.status();
        let body: serde_json::Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::ProviderUnavailable(format!("{}: malformed response: {e}", self.url)))?;
        if !status.is_success() {
            let detail = body.get("error_detail").and_then(|d| d.as_str()).unwrap_or("no detail");
            return Err(Error::ProviderUnavailable(format!("{}: HTTP {status}: {detail}", self.url)));
        }
        body.get("answer")
            .and_then(|a| a.as_str())
            .map(str::to_string)
            .ok_or_else(|| Error::ProviderUnavailable(format!("{}: response has no answer", self.url)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Author,
    Domain,
    Reviewer,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Author => "author",
            AgentKind::Domain => "domain",
            AgentKind::Reviewer => "reviewer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRegistryEntry {
    pub agent_id: String,
    pub kind: AgentKind,
    /// `local:<id>` for an in-process handle, otherwise an HTTP URL.
    pub endpoint: String,
    pub capability: String,
}

impl AgentRegistryEntry {
    pub fn local(agent_id: impl Into<String>, kind: AgentKind, capability: impl Into<String>) -> Self {
        let agent_id = agent_id.into();
        AgentRegistryEntry { endpoint: format!("local:{agent_id}"), agent_id, kind, capability: capability.into() }
    }

    pub fn is_local(&self) -> bool {
        self.endpoint.starts_with("local:")
    }
}

#[derive(Default, Clone)]
pub struct AgentRegistry {
    entries: BTreeMap<String, AgentRegistryEntry>,
    handles: BTreeMap<String, Arc<dyn Agent>>,
}

impl std::fmt::Debug for AgentRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AgentRegistry")
            .field("entries", &self.entries)
            .field("handles", &self.handles.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl AgentRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &AgentRegistryEntry> {
        self.entries.values()
    }

    pub fn get(&self, agent_id: &str) -> Option<&AgentRegistryEntry> {
        self.entries.get(agent_id)
    }

    pub fn by_kind(&self, kind: AgentKind) -> Vec<&AgentRegistryEntry> {
        self.entries.values().filter(|e| e.kind == kind).collect()
    }

    /// Adds an entry. Existing entries are never touched.
    pub fn register_agent(&mut self, entry: AgentRegistryEntry) -> Result<()> {
        if entry.agent_id.trim().is_empty() {
            return Err(Error::InvalidRequest("agent_id is empty".into()));
        }
        if entry.capability.trim().is_empty() {
            return Err(Error::InvalidRequest(format!("agent {} has no capability description", entry.agent_id)));
        }
        if self.entries.contains_key(&entry.agent_id) {
            return Err(Error::DuplicateAgent(entry.agent_id));
        }
        self.entries.insert(entry.agent_id.clone(), entry);
        Ok(())
    }

    /// Registers an entry together with its in-process handle.
    pub fn register_local(&mut self, entry: AgentRegistryEntry, handle: Arc<dyn Agent>) -> Result<()> {
        let id = entry.agent_id.clone();
        self.register_agent(entry)?;
        self.handles.insert(id, handle);
        Ok(())
    }

    /// Attaches a handle to an already registered `local:` entry.
    pub fn attach(&mut self, agent_id: &str, handle: Arc<dyn Agent>) -> Result<()> {
        if !self.entries.contains_key(agent_id) {
            return Err(Error::UnknownAgent(agent_id.to_string()));
        }
        self.handles.insert(agent_id.to_string(), handle);
        Ok(())
    }

    pub fn resolve(&self, agent_id: &str) -> Result<Arc<dyn Agent>> {
        let entry = self.entries.get(agent_id).ok_or_else(|| Error::UnknownAgent(agent_id.to_string()))?;
        if let Some(h) = self.handles.get(agent_id) {
            return Ok(h.clone());
        }
        if entry.endpoint.starts_with("http://") || entry.endpoint.starts_with("https://") {
            return Ok(Arc::new(HttpAgent::new(entry.endpoint.clone(), Duration::from_secs(120))));
        }
        Err(Error::ProviderUnavailable(format!("agent {agent_id} has no reachable endpoint ({})", entry.endpoint)))
    }

    /// Reads a JSON list of entries.
    pub fn load_entries(path: &Path) -> Result<Vec<AgentRegistryEntry>> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::Config(format!("registry {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subtask {
    pub subtask_id: String,
    pub instruction: String,
    pub assigned_agent_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionMode {
    Sequential,
    Parallel,
}

/// A weakly connected component of the dependency graph. Groups never
/// depend on each other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskGroup {
    pub subtask_ids: Vec<String>,
    pub mode: ExecutionMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub subtasks: Vec<Subtask>,
    /// `(before, after)`
    pub dependencies: BTreeSet<(String, String)>,
    pub groups: Vec<TaskGroup>,
    /// Plan lines that could not be used.
    pub dropped: usize,
}

impl TaskPlan {
    /// Validates and derives groups. Fails on a cycle, unknown ids or an empty plan.
    pub fn new(subtasks: Vec<Subtask>, dependencies: BTreeSet<(String, String)>, dropped: usize) -> Result<Self> {
        if subtasks.is_empty() {
            return Err(Error::NoViablePlan("no valid subtasks".into()));
        }
        let pos: BTreeMap<&str, usize> = subtasks.iter().enumerate().map(|(i, s)| (s.subtask_id.as_str(), i)).collect();
        if pos.len() != subtasks.len() {
            return Err(Error::NoViablePlan("duplicate subtask ids".into()));
        }
        for (a, b) in &dependencies {
            if !pos.contains_key(a.as_str()) || !pos.contains_key(b.as_str()) {
                return Err(Error::NoViablePlan(format!("dependency {a} -> {b} names an unknown subtask")));
            }
        }
        let n = subtasks.len();
        let mut indeg = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for (a, b) in &dependencies {
            succ[pos[a.as_str()]].push(pos[b.as_str()]);
            indeg[pos[b.as_str()]] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = queue.pop() {
            seen += 1;
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    queue.push(j);
                }
            }
        }
        if seen != n {
            return Err(Error::NoViablePlan("dependency cycle".into()));
        }

        // union-find over dependency edges
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for (a, b) in &dependencies {
            let (ra, rb) = (find(&mut parent, pos[a.as_str()]), find(&mut parent, pos[b.as_str()]));
            parent[ra.max(rb)] = ra.min(rb);
        }
        let mut comps: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (i, s) in subtasks.iter().enumerate() {
            let r = find(&mut parent, i);
            comps.entry(r).or_default().push(s.subtask_id.clone());
        }
        let groups = comps
            .into_values()
            .map(|ids| {
                let chained = dependencies.iter().any(|(a, _)| ids.contains(a));
                TaskGroup { subtask_ids: ids, mode: if chained { ExecutionMode::Sequential } else { ExecutionMode::Parallel } }
            })
            .collect();
        Ok(TaskPlan { subtasks, dependencies, groups, dropped })
    }

    pub fn agent_ids(&self) -> BTreeSet<&str> {
        self.subtasks.iter().map(|s| s.assigned_agent_id.as_str()).collect()
    }
}

pub fn decomposition_prompt(query: &str, registry: &AgentRegistry) -> GenerationRequest {
    let agents: String = registry
        .entries()
        .map(|e| format!("- {} ({}): {}\n", e.agent_id, e.kind.as_str(), e.capability.trim()))
        .collect();
    GenerationRequest::new(
        "You coordinate a team of specialist research agents. Break the user's problem into subtasks, \
         assign each to the most suitable agent and state which subtasks need the results of others.",
        format!(
            "Problem:\n{query}\n\nAvailable agents:\n{agents}\nReply with one line per subtask and one line per dependency:\n\
             SUBTASK <subtask_id> | <agent_id> | <instruction>\nDEPENDS <before_subtask_id> -> <after_subtask_id>"
        ),
    )
}

/// Parses `SUBTASK` / `DEPENDS` lines. Lines naming unregistered agents,
/// duplicate ids or unknown subtasks are dropped and counted.
pub fn parse_plan(text: &str, registry: &AgentRegistry) -> Result<TaskPlan> {
    let mut subtasks: Vec<Subtask> = Vec::new();
    let mut raw_deps = Vec::new();
    let mut dropped = 0;
    for line in text.lines().map(str::trim) {
        let line = line.trim_start_matches(['-', '*', ' ']);
        if let Some(rest) = strip_keyword(line, "SUBTASK") {
            let parts: Vec<&str> = rest.splitn(3, '|').map(str::trim).collect();
            let ok = parts.len() == 3
                && !parts[0].is_empty()
                && !parts[2].is_empty()
                && registry.get(parts[1]).is_some()
                && !subtasks.iter().any(|s| s.subtask_id == parts[0]);
            if ok {
                subtasks.push(Subtask {
                    subtask_id: parts[0].to_string(),
                    assigned_agent_id: parts[1].to_string(),
                    instruction: parts[2].to_string(),
                });
            } else {
                dropped += 1;
            }
        } else if let Some(rest) = strip_keyword(line, "DEPENDS") {
            match rest.split_once("->") {
                Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                    raw_deps.push((a.trim().to_string(), b.trim().to_string()))
                }
                _ => dropped += 1,
            }
        }
    }
    let ids: BTreeSet<&str> = subtasks.iter().map(|s| s.subtask_id.as_str()).collect();
    let mut deps = BTreeSet::new();
    for (a, b) in raw_deps {
        if a == b {
            return Err(Error::NoViablePlan(format!("subtask {a} depends on itself")));
        }
        if ids.contains(a.as_str()) && ids.contains(b.as_str()) {
            deps.insert((a, b));
        } else {
            dropped += 1;
        }
    }
    TaskPlan::new(subtasks, deps, dropped)
}

fn strip_keyword<'a>(line: &'a str, kw: &str) -> Option<&'a str> {
    let head = line.get(..kw.len())?;
    if head.eq_ignore_ascii_case(kw) {
        let rest = &line[kw.len()..];
        (rest.starts_with([' ', ':', '\t'])).then(|| rest.trim_start_matches([' ', ':', '\t']))
    } else {
        None
    }
}

pub fn decompose(query: &str, registry: &AgentRegistry, generator: &dyn Generator) -> Result<TaskPlan> {
    if registry.is_empty() {
        return Err(Error::NoViablePlan("registry is empty".into()));
    }
    if query.trim().is_empty() {
        return Err(Error::InvalidRequest("query is empty".into()));
    }
    let reply = generator.generate(&decomposition_prompt(query, registry))?;
    parse_plan(&reply.text, registry)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialistOutput {
    pub subtask_id: String,
    pub agent_id: String,
    pub text: String,
    pub claims: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Logical clock ticks taken when the agent was invoked and when it returned.
    pub start_seq: u64,
    pub end_seq: u64,
}

impl SpecialistOutput {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

pub fn extract_claims(text: &str) -> Vec<String> {
    split_sentences(text).into_iter().map(str::to_string).collect()
}

struct Schedule {
    ready: BTreeSet<usize>,
    indeg: Vec<usize>,
    outputs: Vec<Option<SpecialistOutput>>,
    clock: u64,
    done: usize,
}

/// Runs the plan with at most `parallelism` agents in flight. A subtask
/// starts only after all of its prerequisites finished and sees their
/// outputs appended to its instruction. Failures become error-marker
/// outputs, so every subtask yields exactly one output.
pub fn dispatch(plan: &TaskPlan, registry: &AgentRegistry, parallelism: usize) -> Vec<SpecialistOutput> {
    let n = plan.subtasks.len();
    if n == 0 {
        return Vec::new();
    }
    let pos: BTreeMap<&str, usize> = plan.subtasks.iter().enumerate().map(|(i, s)| (s.subtask_id.as_str(), i)).collect();
    let mut preds = vec![Vec::new(); n];
    let mut succs = vec![Vec::new(); n];
    let mut indeg = vec![0; n];
    for (a, b) in &plan.dependencies {
        let (ia, ib) = (pos[a.as_str()], pos[b.as_str()]);
        preds[ib].push(ia);
        succs[ia].push(ib);
        indeg[ib] += 1;
    }
    let ready = (0..n).filter(|&i| indeg[i] == 0).collect();
    let state = Mutex::new(Schedule { ready, indeg, outputs: vec![None; n], clock: 0, done: 0 });
    let wake = Condvar::new();
    let workers = parallelism.clamp(1, n);

    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let (idx, instruction, start_seq) = {
                    let mut g = state.lock().unwrap_or_else(|p| p.into_inner());
                    loop {
                        if g.done == n {
                            return;
                        }
                        if let Some(i) = g.ready.pop_first() {
                            g.clock += 1;
                            let instr = with_upstream(&plan.subtasks[i].instruction, &preds[i], &g.outputs);
                            break (i, instr, g.clock);
                        }
                        g = wake.wait(g).unwrap_or_else(|p| p.into_inner());
                    }
                };
                let task = &plan.subtasks[idx];
                let result = registry.resolve(&task.assigned_agent_id).and_then(|agent| {
                    std::panic::catch_unwind(AssertUnwindSafe(|| agent.respond(&instruction)))
                        .unwrap_or_else(|_| Err(Error::Internal("agent panicked".into())))
                });
                let mut g = state.lock().unwrap_or_else(|p| p.into_inner());
                g.clock += 1;
                let end_seq = g.clock;
                let (text, claims, error) = match result {
                    Ok(text) => {
                        let claims = extract_claims(&text);
                        (text, claims, None)
                    }
                    Err(e) => (format!("{ERROR_MARKER} {e}"), Vec::new(), Some(e.to_string())),
                };
                g.outputs[idx] = Some(SpecialistOutput {
                    subtask_id: task.subtask_id.clone(),
                    agent_id: task.assigned_agent_id.clone(),
                    text,
                    claims,
                    error,
                    start_seq,
                    end_seq,
                });
                g.done += 1;
                for &j in &succs[idx] {
                    g.indeg[j] -= 1;
                    if g.indeg[j] == 0 {
                        g.ready.insert(j);
                    }
                }
                wake.notify_all();
            });
        }
    });
    let g = state.into_inner().unwrap_or_else(|p| p.into_inner());
    g.outputs.into_iter().map(|o| o.expect("every subtask ran")).collect()
}

fn with_upstream(instruction: &str, preds: &[usize], outputs: &[Option<SpecialistOutput>]) -> String {
    if preds.is_empty() {
        return instruction.to_string();
    }
    let mut out = format!("{instruction}\n\nResults of prerequisite subtasks:");
    for &p in preds {
        if let Some(o) = &outputs[p] {
            out.push_str(&format!("\n[{} by {}] {}", o.subtask_id, o.agent_id, o.text));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Supported,
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactFlag {
    pub claim: String,
    pub agent_id: String,
    pub subtask_id: String,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contradiction {
    pub agent_a: String,
    pub agent_b: String,
    pub subtask_a: String,
    pub subtask_b: String,
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewReport {
    pub fact_flags: Vec<FactFlag>,
    pub contradictions: Vec<Contradiction>,
}

pub fn consistency_prompt(a: &SpecialistOutput, b: &SpecialistOutput) -> GenerationRequest {
    GenerationRequest::new(
        "You are a consistency checker. Decide whether two specialist answers contradict each other.",
        format!(
            "Answer A ({}):\n{}\n\nAnswer B ({}):\n{}\n\nReply with CONSISTENT, or with CONTRADICTION: <one-sentence description>.",
            a.agent_id, a.text, b.agent_id, b.text
        ),
    )
}

/// Pairwise comparison of successful outputs. Identical texts are never
/// contradictory and are not sent to the checker. A checker failure or an
/// unrecognized reply counts as no contradiction.
pub fn consistency_check(outputs: &[SpecialistOutput], generator: &dyn Generator) -> Vec<Contradiction> {
    let ok: Vec<&SpecialistOutput> = outputs.iter().filter(|o| !o.failed()).collect();
    let mut found = Vec::new();
    for (i, a) in ok.iter().enumerate() {
        for b in &ok[i + 1..] {
            if normalize_label(&a.text) == normalize_label(&b.text) {
                continue;
            }
            let Ok(reply) = generator.generate(&consistency_prompt(a, b)) else { continue };
            if let Some(rest) = strip_keyword(reply.text.trim(), "CONTRADICTION") {
                let description = if rest.trim().is_empty() { "unspecified contradiction".to_string() } else { rest.trim().to_string() };
                found.push(Contradiction {
                    agent_a: a.agent_id.clone(),
                    agent_b: b.agent_id.clone(),
                    subtask_a: a.subtask_id.clone(),
                    subtask_b: b.subtask_id.clone(),
                    description,
                });
            } else if reply.text.trim().eq_ignore_ascii_case("contradiction") {
                found.push(Contradiction {
                    agent_a: a.agent_id.clone(),
                    agent_b: b.agent_id.clone(),
                    subtask_a: a.subtask_id.clone(),
                    subtask_b: b.subtask_id.clone(),
                    description: "unspecified contradiction".into(),
                });
            }
        }
    }
    found
}

pub fn fact_prompt(claim: &str, evidence: &[&SpecialistOutput]) -> GenerationRequest {
    let mut ev = String::new();
    for o in evidence {
        ev.push_str(&format!("[{}] {}\n", o.agent_id, o.text));
    }
    if ev.is_empty() {
        ev.push_str("(no other agent output)\n");
    }
    GenerationRequest::new(
        "You are a fact checker. Judge a claim against the outputs of other agents and your own knowledge.",
        format!("Claim:\n{claim}\n\nOther agents' outputs:\n{ev}\nReply with SUPPORTED, or with UNSUPPORTED: <reason>."),
    )
}

/// One verdict per claim. A claim found verbatim in another agent's output
/// is supported without asking the checker.
pub fn fact_check(outputs: &[SpecialistOutput], evidence: &[SpecialistOutput], generator: &dyn Generator) -> Vec<FactFlag> {
    let mut flags = Vec::new();
    for o in outputs {
        let others: Vec<&SpecialistOutput> =
            evidence.iter().filter(|e| !e.failed() && e.agent_id != o.agent_id).collect();
        for claim in &o.claims {
            let needle = normalize_label(claim);
            let (verdict, note) = if let Some(src) = others.iter().find(|e| normalize_label(&e.text).contains(&needle)) {
                (Verdict::Supported, format!("stated verbatim by {}", src.agent_id))
            } else {
                match generator.generate(&fact_prompt(claim, &others)) {
                    Ok(r) => parse_fact_verdict(&r.text),
                    Err(e) => (Verdict::Unsupported, format!("checker unavailable: {e}")),
                }
            };
            flags.push(FactFlag {
                claim: claim.clone(),
                agent_id: o.agent_id.clone(),
                subtask_id: o.subtask_id.clone(),
                verdict,
                note,
            });
        }
    }
    flags
}

fn parse_fact_verdict(text: &str) -> (Verdict, String) {
    let t = text.trim();
    if let Some(rest) = strip_keyword(t, "UNSUPPORTED") {
        (Verdict::Unsupported, rest.trim().to_string())
    } else if t.eq_ignore_ascii_case("unsupported") {
        (Verdict::Unsupported, String::new())
    } else if let Some(rest) = strip_keyword(t, "SUPPORTED") {
        (Verdict::Supported, rest.trim().to_string())
    } else if t.eq_ignore_ascii_case("supported") {
        (Verdict::Supported, String::new())
    } else {
        (Verdict::Unsupported, format!("unparseable checker reply: {}", author::truncate_chars(t, 120)))
    }
}

pub fn integration_prompt(query: &str, outputs: &[SpecialistOutput], report: &ReviewReport) -> GenerationRequest {
    let mut user = format!("Question:\n{query}\n\n## Specialist Outputs\n");
    for o in outputs {
        user.push_str(&format!("[{} | {}] {}\n", o.subtask_id, o.agent_id, o.text));
    }
    if !report.contradictions.is_empty() {
        user.push_str(&format!("\n{COMPETING_VIEWPOINTS}\n"));
        for c in &report.contradictions {
            user.push_str(&format!("- {} vs {}: {}\n", c.agent_a, c.agent_b, c.description));
        }
    }
    let unsupported: Vec<&FactFlag> = report.fact_flags.iter().filter(|f| f.verdict == Verdict::Unsupported).collect();
    if !unsupported.is_empty() {
        user.push_str("\n## Unverified Claims\n");
        for f in unsupported {
            user.push_str(&format!("- ({}) {}: {}\n", f.agent_id, f.claim, f.note));
        }
    }
    user.push_str(
        "\nWrite one answer to the question. Where the specialists disagree, present the competing viewpoints \
         instead of silently picking one; qualify unverified claims.",
    );
    GenerationRequest::new("You integrate the work of specialist research agents into one answer.", user)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Integration {
    pub prompt: GenerationRequest,
    pub text: String,
}

pub fn integrate(query: &str, outputs: &[SpecialistOutput], report: &ReviewReport, generator: &dyn Generator) -> Result<Integration> {
    let prompt = integration_prompt(query, outputs, report);
    let text = generator.generate(&prompt)?.text;
    Ok(Integration { prompt, text })
}

/// Full record of one coordinator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasTrace {
    pub query: String,
    pub plan: TaskPlan,
    pub outputs: Vec<SpecialistOutput>,
    pub report: ReviewReport,
    pub integration_prompt: GenerationRequest,
    pub answer: String,
}

/// decompose, dispatch, fact check, consistency check, integrate.
pub fn mas_query(query: &str, registry: &AgentRegistry, providers: &Providers, parallelism: usize) -> Result<MasTrace> {
    let generator = providers.generator.as_ref();
    let plan = decompose(query, registry, generator)?;
    let outputs = dispatch(&plan, registry, parallelism);
    let report = ReviewReport {
        fact_flags: fact_check(&outputs, &outputs, generator),
        contradictions: consistency_check(&outputs, generator),
    };
    let integration = integrate(query, &outputs, &report, generator)?;
    Ok(MasTrace {
        query: query.to_string(),
        plan,
        outputs,
        report,
        integration_prompt: integration.prompt,
        answer: integration.text,
    })
}
