//! File-backed build / run / score for every task.
//!
//! Items, predictions and the report of a task live next to each other as
//! `<task>-<seed>-{items,predictions,report}.jsonl` in the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::collab::{build_collab, predict_collab, score_collab, CollabItem, CollabPrediction};
use super::hle::{build_hle, judge_answer, HleItem, HleQuestion, HleRecord};
use super::nskp::{build_nskp, project_keywords, rank_by_overlap, NskpItem, WorkBrief};
use super::scitwin::{build_scitwin, predict, score_items, score_ranked, SciTwinItem, SciTwinParams, SciTwinPrediction};
use super::{rng, ScoreReport, Task, HIT_KS};
use crate::author::{build_memory, AuthorMemory};
use crate::config::{Config, ProviderKind};
use crate::corpus::Corpus;
use crate::domain::{build_graph, DomainAgent, DomainBuild, Snapshot};
use crate::error::{Error, Result};
use crate::orchestrator::hle::{run_hle_workflow, DomainLexicon, HleWorkflow};
use crate::orchestrator::{Agent, AuthorAgent};
use crate::persist;
use crate::providers::Providers;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NskpPrediction {
    pub ranking: Vec<usize>,
    pub projected: Vec<String>,
    pub padded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub task: Task,
    pub seed: u64,
    pub report: ScoreReport,
}

/// Everything a benchmark run reads.
pub struct BenchContext {
    pub cfg: Arc<Config>,
    pub corpus: Corpus,
    pub snapshot: Snapshot,
    pub questions: Vec<HleQuestion>,
    pub lexicon: DomainLexicon,
    pub providers: Providers,
    pub out_dir: PathBuf,
    pub seed: u64,
    domain: OnceLock<DomainBuild>,
    memories: Mutex<BTreeMap<(String, Option<NaiveDate>), Arc<AuthorMemory>>>,
}

impl BenchContext {
    pub fn new(
        cfg: Config,
        corpus: Corpus,
        snapshot: Snapshot,
        questions: Vec<HleQuestion>,
        providers: Providers,
        out_dir: PathBuf,
        seed: u64,
    ) -> Self {
        BenchContext {
            cfg: Arc::new(cfg),
            corpus,
            snapshot,
            questions,
            lexicon: DomainLexicon::default(),
            providers,
            out_dir,
            seed,
            domain: OnceLock::new(),
            memories: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn path(&self, task: Task, what: &str) -> PathBuf {
        self.out_dir.join(format!("{task}-{}-{what}.jsonl", self.seed))
    }

    fn domain(&self) -> Result<&DomainBuild> {
        if let Some(d) = self.domain.get() {
            return Ok(d);
        }
        let built = build_graph(&self.snapshot, self.providers.embedder.as_ref(), &self.cfg.domain)?;
        Ok(self.domain.get_or_init(|| built))
    }

    /// Memory of `author` built from documents dated on or before `as_of`
    /// (all documents when `None`). Memories are cached per `(author, as_of)`.
    pub fn memory(&self, author: &str, as_of: Option<NaiveDate>) -> Result<Arc<AuthorMemory>> {
        let key = (author.to_string(), as_of);
        if let Some(m) = self.memories.lock().unwrap_or_else(|p| p.into_inner()).get(&key) {
            return Ok(m.clone());
        }
        let corpus = match as_of {
            Some(d) => std::borrow::Cow::Owned(self.corpus.truncated_at(d)),
            None => std::borrow::Cow::Borrowed(&self.corpus),
        };
        let m = Arc::new(build_memory(&corpus, author, &self.providers, &self.cfg)?);
        self.memories.lock().unwrap_or_else(|p| p.into_inner()).insert(key, m.clone());
        Ok(m)
    }

    pub fn agent(&self, author: &str, as_of: Option<NaiveDate>) -> Result<AuthorAgent> {
        Ok(AuthorAgent { memory: self.memory(author, as_of)?, providers: self.providers.clone(), cfg: self.cfg.clone() })
    }

    fn judge_is_model(&self) -> bool {
        self.cfg.provider.kind != ProviderKind::Mock
    }
}

fn write<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    persist::write_jsonl(path, rows)
}

fn read_or_build<T: DeserializeOwned + Serialize>(ctx: &BenchContext, task: Task) -> Result<Vec<T>> {
    let p = ctx.path(task, "items");
    if !p.exists() {
        build(ctx, task)?;
    }
    persist::read_jsonl(&p)
}

/// Builds and writes the items of `task`; returns the item count.
pub fn build(ctx: &BenchContext, task: Task) -> Result<usize> {
    let mut r = rng(ctx.seed);
    let path = ctx.path(task, "items");
    let n = match task {
        Task::SciTwin => {
            let params = SciTwinParams {
                n_fact: ctx.cfg.bench.n_fact,
                n_style: ctx.cfg.bench.n_style,
                context: ctx.cfg.bench.style_context,
            };
            let domain = ctx.domain()?;
            let mut items = Vec::new();
            for a in &ctx.corpus.authors {
                let gen = ctx.providers.generator.as_ref();
                let emb = ctx.providers.embedder.as_ref();
                match build_scitwin(&ctx.corpus, domain, &a.author_id, params, gen, emb, &mut r) {
                    Ok((facts, styles)) => {
                        items.extend(facts.into_iter().map(SciTwinItem::Fact));
                        items.extend(styles.into_iter().map(SciTwinItem::Style));
                    }
                    Err(Error::InsufficientCorpus(why)) => tracing::warn!(author = %a.author_id, %why, "skipping author"),
                    Err(e) => return Err(e),
                }
            }
            if items.is_empty() {
                return Err(Error::InsufficientCorpus("no author qualifies for sci-twin items".into()));
            }
            write(&path, &items)?;
            items.len()
        }
        Task::Nskp => {
            let items = build_nskp(&ctx.corpus, &mut r);
            write(&path, &items)?;
            items.len()
        }
        Task::Collab => {
            let items = build_collab(&ctx.snapshot, &ctx.domain()?.graph, ctx.cfg.bench.collab_negatives, &mut r);
            write(&path, &items)?;
            items.len()
        }
        Task::Hle => {
            let items = build_hle(&ctx.questions, &ctx.lexicon);
            write(&path, &items)?;
            items.len()
        }
    };
    tracing::info!(%task, items = n, path = %path.display(), "built");
    Ok(n)
}

/// Predicts every item, writes predictions and the report.
pub fn run(ctx: &BenchContext, task: Task) -> Result<ScoreReport> {
    let preds = ctx.path(task, "predictions");
    match task {
        Task::SciTwin => {
            let items: Vec<SciTwinItem> = read_or_build(ctx, task)?;
            let mut out = Vec::with_capacity(items.len());
            for item in &items {
                // style questions only see papers before the target
                let as_of = match item {
                    SciTwinItem::Fact(_) => None,
                    SciTwinItem::Style(s) => s.context_doc_ids.last().and_then(|d| ctx.corpus.document(d)).map(|d| d.timestamp),
                };
                let author = match item {
                    SciTwinItem::Fact(f) => &f.author_id,
                    SciTwinItem::Style(s) => &s.author_id,
                };
                out.push(predict(item, &ctx.agent(author, as_of)?, &ctx.corpus)?);
            }
            write(&preds, &out)?;
        }
        Task::Nskp => {
            let items: Vec<NskpItem> = read_or_build(ctx, task)?;
            let mut out = Vec::with_capacity(items.len());
            for item in &items {
                let work_t = ctx.corpus.document(&item.work_t.doc_id).ok_or_else(|| {
                    Error::Referential(format!("item refers to missing document {}", item.work_t.doc_id))
                })?;
                let agent = ctx.agent(&item.author_id, Some(work_t.timestamp))?;
                let docs = ctx.corpus.documents_of(&item.author_id);
                let end = docs.iter().position(|d| d.doc_id == work_t.doc_id).map_or(0, |i| i + 1);
                let recent: Vec<WorkBrief> =
                    docs[end.saturating_sub(ctx.cfg.bench.style_context)..end].iter().map(|d| WorkBrief::from(*d)).collect();
                let p = project_keywords(&agent, &agent.memory.persona, &recent)?;
                out.push(NskpPrediction { ranking: rank_by_overlap(&item.options, &p.keywords), projected: p.keywords, padded: p.padded });
            }
            write(&preds, &out)?;
        }
        Task::Collab => {
            let items: Vec<CollabItem> = read_or_build(ctx, task)?;
            let out = items
                .iter()
                .map(|i| predict_collab(i, ctx.providers.generator.as_ref()))
                .collect::<Result<Vec<CollabPrediction>>>()?;
            write(&preds, &out)?;
        }
        Task::Hle => {
            let items: Vec<HleItem> = read_or_build(ctx, task)?;
            let domain = Arc::new(DomainAgent::new(
                "snapshot",
                ctx.domain()?.clone(),
                ctx.providers.clone(),
                ctx.cfg.domain.clone(),
            ));
            // the bundled snapshot spans all disciplines, so it serves every domain
            let domain_agents: BTreeMap<String, Arc<DomainAgent>> =
                ctx.lexicon.domains.iter().map(|d| (d.name.clone(), domain.clone())).collect();
            let factory = |id: &str| -> Result<Arc<dyn Agent>> { Ok(Arc::new(ctx.agent(id, None)?)) };
            let wf = HleWorkflow {
                lexicon: &ctx.lexicon,
                domain_agents: &domain_agents,
                author_factory: &factory,
                coordinator: ctx.providers.generator.as_ref(),
                solver: ctx.providers.generator.as_ref(),
                budgets: ctx.cfg.orchestrator.hle,
            };
            let judge = ctx.judge_is_model().then(|| ctx.providers.generator.as_ref());
            let mut out = Vec::with_capacity(items.len());
            for item in &items {
                let o = run_hle_workflow(&item.question, &wf)?;
                let correct = match judge_answer(&o.answer, &item.answer, judge) {
                    Ok(c) => c,
                    Err(Error::InvalidRequest(_)) => false,
                    Err(e) => return Err(e),
                };
                out.push(HleRecord {
                    id: item.id.clone(),
                    answer: o.answer,
                    confidence: o.confidence,
                    recruited: o.recruits.len(),
                    fallback: o.fallback,
                    correct,
                });
            }
            write(&preds, &out)?;
        }
    }
    score(ctx, task)
}

/// Scores written predictions against written items.
pub fn score(ctx: &BenchContext, task: Task) -> Result<ScoreReport> {
    let items_path = ctx.path(task, "items");
    let preds_path = ctx.path(task, "predictions");
    let report = match task {
        Task::SciTwin => {
            let items: Vec<SciTwinItem> = persist::read_jsonl(&items_path)?;
            let preds: Vec<SciTwinPrediction> = persist::read_jsonl(&preds_path)?;
            score_items(&items, &preds)?
        }
        Task::Nskp => {
            let items: Vec<NskpItem> = persist::read_jsonl(&items_path)?;
            let preds: Vec<NskpPrediction> = persist::read_jsonl(&preds_path)?;
            let answers: Vec<usize> = items.iter().map(|i| i.answer_index).collect();
            let rankings: Vec<Vec<usize>> = preds.into_iter().map(|p| p.ranking).collect();
            score_ranked(&rankings, &answers, &HIT_KS)?
        }
        Task::Collab => {
            let items: Vec<CollabItem> = persist::read_jsonl(&items_path)?;
            let preds: Vec<CollabPrediction> = persist::read_jsonl(&preds_path)?;
            let answers: Vec<String> = preds.into_iter().map(|p| p.answer).collect();
            score_collab(&answers, &items)?
        }
        Task::Hle => {
            let items: Vec<HleItem> = persist::read_jsonl(&items_path)?;
            let records: Vec<HleRecord> = persist::read_jsonl(&preds_path)?;
            if records.len() != items.len() || items.is_empty() {
                return Err(Error::LengthMismatch(format!("{} records for {} items", records.len(), items.len())));
            }
            let n = items.len() as f64;
            let mut metrics = BTreeMap::new();
            metrics.insert("accuracy".to_string(), records.iter().filter(|r| r.correct).count() as f64 / n);
            metrics.insert("fallback_rate".to_string(), records.iter().filter(|r| r.fallback).count() as f64 / n);
            ScoreReport { metrics, n_items: items.len() }
        }
    };
    write(&ctx.path(task, "report"), &[ReportRecord { task, seed: ctx.seed, report: report.clone() }])?;
    Ok(report)
}
