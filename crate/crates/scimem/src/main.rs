use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scimem::author::{answer, build_memory, AuthorMemory};
use scimem::bench::hle::HleQuestion;
use scimem::bench::runner::{self, BenchContext};
use scimem::bench::Task;
use scimem::corpus::{load_corpus, Corpus};
use scimem::domain::{build_graph, expand_concept, DomainAgent, DomainBuild, Snapshot};
use scimem::persona::serialize_to_system_prompt;
use scimem::providers::Providers;
use scimem::service::{self, ServiceState};
use scimem::{Config, Error, Result};

// stdout may be a closed pipe (`| head`); losing output there is fine
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const BUNDLED_CORPUS: &str = include_str!("../fixtures/corpus.json");
const BUNDLED_SNAPSHOT: &str = include_str!("../fixtures/domain.json");
const BUNDLED_QUESTIONS: &str = include_str!("../fixtures/hle.jsonl");

#[derive(Parser)]
#[command(name = "scimem", version, about = "Research-memory agents over a publication corpus")]
struct Cli {
    /// TOML or JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Corpus JSON (defaults to the bundled example corpus).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Where author memories and benchmark files are written.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Concept snapshot JSON (defaults to the bundled example snapshot).
    #[arg(long, global = true)]
    snapshot: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and save an author's episodic, semantic and persona memory.
    Distill {
        #[arg(long)]
        author: String,
    },
    /// Inspect persona memory.
    Persona {
        #[command(subcommand)]
        command: PersonaCommand,
    },
    /// Ask an author agent a question.
    Ask {
        #[arg(long)]
        author: String,
        #[arg(long)]
        query: String,
        /// Print the full answer record as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Concept-graph tools.
    Domain {
        #[command(subcommand)]
        command: DomainCommand,
    },
    /// Benchmark item construction, prediction and scoring.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Subcommand)]
enum PersonaCommand {
    Show {
        #[arg(long)]
        author: String,
        /// Print the stored schema as JSON instead of the prompt rendering.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct DomainSource {
    /// A saved domain build or a snapshot; defaults to `--snapshot`.
    #[arg(long)]
    domain: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DomainCommand {
    /// Embed a snapshot and save the build.
    Build {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Search {
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 5)]
        top_n: usize,
        #[command(flatten)]
        src: DomainSource,
    },
    Expand {
        #[arg(long)]
        concept: String,
        #[command(flatten)]
        src: DomainSource,
    },
    Path {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[command(flatten)]
        src: DomainSource,
    },
    Experts {
        #[arg(long)]
        concept: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[command(flatten)]
        src: DomainSource,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    task: Task,
    /// Defaults to `bench.seed` from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Question JSONL for the cross-domain task.
    #[arg(long)]
    questions: Option<PathBuf>,
    /// Defaults to `<data-dir>/bench`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    Build(BenchArgs),
    Run(BenchArgs),
    Score(BenchArgs),
}

struct Env {
    cfg: Config,
    corpus_path: Option<PathBuf>,
    snapshot_path: Option<PathBuf>,
}

impl Env {
    fn data_dir(&self) -> &Path {
        &self.cfg.service.data_dir
    }

    fn corpus(&self) -> Result<Corpus> {
        let loaded = match &self.corpus_path {
            Some(p) => load_corpus(p)?,
            None => Corpus::parse(BUNDLED_CORPUS)?,
        };
        if loaded.dropped_count > 0 {
            tracing::info!(dropped = loaded.dropped_count, "documents after the cutoff were dropped");
        }
        Ok(loaded.corpus)
    }

    fn snapshot(&self) -> Result<Snapshot> {
        match &self.snapshot_path {
            Some(p) => Snapshot::load(p),
            None => Snapshot::parse(BUNDLED_SNAPSHOT),
        }
    }

    fn providers(&self) -> Result<Providers> {
        Providers::from_config(&self.cfg.provider)
    }

    /// Saved memory when present, otherwise built in memory from the corpus.
    fn memory(&self, author: &str, providers: &Providers) -> Result<AuthorMemory> {
        match AuthorMemory::load(self.data_dir(), author) {
            Err(Error::UnknownAuthor(_)) => {
                tracing::info!(author, "no saved memory; building from the corpus");
                build_memory(&self.corpus()?, author, providers, &self.cfg)
            }
            other => other,
        }
    }

    fn domain(&self, src: &DomainSource, providers: &Providers) -> Result<DomainBuild> {
        if let Some(p) = &src.domain {
            return match DomainBuild::load(p) {
                Err(Error::Parse(_)) => build_graph(&Snapshot::load(p)?, providers.embedder.as_ref(), &self.cfg.domain),
                other => other,
            };
        }
        build_graph(&self.snapshot()?, providers.embedder.as_ref(), &self.cfg.domain)
    }

    fn questions(&self, path: Option<&Path>) -> Result<Vec<HleQuestion>> {
        match path {
            Some(p) => scimem::bench::hle::load_questions(p),
            None => BUNDLED_QUESTIONS
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(format!("bundled questions: {e}"))))
                .collect(),
        }
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Internal(e.to_string()))?;
    out!("{s}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(d) = cli.data_dir {
        cfg.service.data_dir = d;
    }
    let corpus_path = cli.corpus.or_else(|| cfg.service.corpus.clone());
    let env = Env { cfg, corpus_path, snapshot_path: cli.snapshot };

    match cli.command {
        Command::Distill { author } => {
            let providers = env.providers()?;
            let memory = build_memory(&env.corpus()?, &author, &providers, &env.cfg)?;
            let dir = memory.save(env.data_dir())?;
            out!(
                "{author}: {} chunks, {} summaries, {} persona concepts -> {}",
                memory.episodic.chunks.len(),
                memory.semantic.summaries.len(),
                memory.persona.nodes.len(),
                dir.display()
            );
        }
        Command::Persona { command: PersonaCommand::Show { author, json } } => {
            let memory = env.memory(&author, &env.providers()?)?;
            if json {
                print_json(&memory.persona)?;
            } else {
                out!(
                    "{}",
                    serialize_to_system_prompt(&memory.persona, env.cfg.persona.max_nodes, env.cfg.persona.max_edges)
                );
            }
        }
        Command::Ask { author, query, json } => {
            let providers = env.providers()?;
            let memory = env.memory(&author, &providers)?;
            let a = answer(&memory, &query, &providers, &env.cfg)?;
            if json {
                print_json(&a)?;
            } else {
                out!("{}", a.text);
                if !a.cited_chunk_ids.is_empty() {
                    out!("\nsources: {}", a.cited_chunk_ids.join(", "));
                }
            }
        }
        Command::Domain { command } => {
            let providers = env.providers()?;
            match command {
                DomainCommand::Build { out } => {
                    let build = build_graph(&env.snapshot()?, providers.embedder.as_ref(), &env.cfg.domain)?;
                    let out = out.unwrap_or_else(|| env.data_dir().join("domains").join("default.json"));
                    if let Some(dir) = out.parent() {
                        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                    }
                    build.save(&out)?;
                    out!(
                        "{} concepts, {} hierarchical and {} associative edges, {} dangling references -> {}",
                        build.graph.nodes.len(),
                        build.graph.hierarchical_edges.len(),
                        build.graph.associative_edges.len(),
                        build.dangling_references,
                        out.display()
                    );
                }
                DomainCommand::Search { query, top_n, src } => {
                    let agent = DomainAgent::new("cli", env.domain(&src, &providers)?, providers, env.cfg.domain.clone());
                    let hits: Vec<BTreeMap<&str, serde_json::Value>> = agent
                        .search(&query, top_n)?
                        .iter()
                        .map(|(c, s)| {
                            BTreeMap::from([
                                ("concept_id", c.concept_id.clone().into()),
                                ("label", c.label.clone().into()),
                                ("score", (*s).into()),
                            ])
                        })
                        .collect();
                    print_json(&hits)?;
                }
                DomainCommand::Expand { concept, src } => {
                    print_json(&expand_concept(&env.domain(&src, &providers)?.graph, &concept)?)?;
                }
                DomainCommand::Path { from, to, k, src } => {
                    let agent = DomainAgent::new("cli", env.domain(&src, &providers)?, providers, env.cfg.domain.clone());
                    print_json(&agent.paths(&from, &to, k)?)?;
                }
                DomainCommand::Experts { concept, k, src } => {
                    let agent = DomainAgent::new("cli", env.domain(&src, &providers)?, providers, env.cfg.domain.clone());
                    let experts: Vec<BTreeMap<&str, serde_json::Value>> = agent
                        .experts(&concept, k)?
                        .into_iter()
                        .map(|(a, c)| BTreeMap::from([("author_id", a.into()), ("citations", c.into())]))
                        .collect();
                    print_json(&experts)?;
                }
            }
        }
        Command::Bench { command } => {
            let (args, step) = match command {
                BenchCommand::Build(a) => (a, "build"),
                BenchCommand::Run(a) => (a, "run"),
                BenchCommand::Score(a) => (a, "score"),
            };
            let seed = args.seed.unwrap_or(env.cfg.bench.seed);
            let out_dir = args.out_dir.clone().unwrap_or_else(|| env.data_dir().join("bench"));
            let questions = if args.task == Task::Hle { env.questions(args.questions.as_deref())? } else { Vec::new() };
            let ctx = BenchContext::new(
                env.cfg.clone(),
                env.corpus()?,
                env.snapshot()?,
                questions,
                env.providers()?,
                out_dir,
                seed,
            );
            match step {
                "build" => {
                    let n = runner::build(&ctx, args.task)?;
                    out!("{n} items -> {}", ctx.path(args.task, "items").display());
                }
                _ => {
                    let report =
                        if step == "run" { runner::run(&ctx, args.task)? } else { runner::score(&ctx, args.task)? };
                    out!("{} seed {seed}: {} items", args.task, report.n_items);
                    for (k, v) in &report.metrics {
                        out!("  {k}: {v:.4}");
                    }
                }
            }
        }
        Command::Serve { host, port } => {
            let mut cfg = env.cfg.clone();
            if let Some(h) = host {
                cfg.service.host = h;
            }
            if let Some(p) = port {
                cfg.service.port = p;
            }
            let state = if cfg.service.domains.is_empty() {
                // serve the snapshot as the `default` domain when none is configured
                let providers = Providers::from_config(&cfg.provider)?;
                let authors = AuthorMemory::load_all(&cfg.service.data_dir)?;
                let build = build_graph(&env.snapshot()?, providers.embedder.as_ref(), &cfg.domain)?;
                ServiceState::new(cfg, providers, authors, BTreeMap::from([("default".to_string(), build)]))?
            } else {
                ServiceState::from_config(cfg)?
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Internal(e.to_string()))?;
            rt.block_on(service::serve(state))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
