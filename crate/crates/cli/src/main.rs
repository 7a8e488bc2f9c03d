use clap::{Args, Parser, Subcommand};
use kgqa::affinity::EmbeddingStore;
use kgqa::metrics::parse_benchmark;
use kgqa::pipeline::{answer_question, run_benchmark, ConfigOverrides, Engine, PipelineConfig};
use kgqa::sparql::Dialect;
use kgqa_cli::{load_config, router, AppState, RequestLog};
use kgqa_fixture::{dbpedia_slice, FixtureOptions, FixtureServer, TripleStore, EMBEDDINGS};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

/// Answer English questions over a SPARQL endpoint.
#[derive(Debug, Parser)]
#[command(name = "kgqa", version)]
struct Cli {
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Settings {
    /// TOML configuration file.
    #[arg(long, global = true, env = "KGQA_CONFIG")]
    config: Option<PathBuf>,
    /// SPARQL endpoint URL.
    #[arg(long, global = true, env = "KGQA_ENDPOINT")]
    endpoint: Option<String>,
    /// Free-text search syntax: virtuoso, stardog or generic_regex.
    #[arg(long, global = true, env = "KGQA_DIALECT")]
    dialect: Option<Dialect>,
    /// Word vectors in text format.
    #[arg(long, global = true, env = "KGQA_EMBEDDINGS")]
    embeddings: Option<PathBuf>,
    /// Row limit of each vertex probe.
    #[arg(long, global = true, env = "KGQA_MAX_VR")]
    max_vr: Option<usize>,
    /// Vertices kept per entity phrase.
    #[arg(long, global = true, env = "KGQA_K_VERTICES")]
    k_vertices: Option<usize>,
    /// Predicates kept per relation phrase.
    #[arg(long, global = true, env = "KGQA_K_PREDICATES")]
    k_predicates: Option<usize>,
    /// Number of ranked queries to execute.
    #[arg(long, global = true, env = "KGQA_MAX_QUERIES")]
    max_queries: Option<usize>,
    /// Class affinity threshold of the answer filter.
    #[arg(long, global = true, env = "KGQA_TAU")]
    tau: Option<f64>,
    /// Queries executed concurrently.
    #[arg(long, global = true, env = "KGQA_PARALLELISM")]
    parallelism: Option<usize>,
    /// Remote triple-pattern extraction service.
    #[arg(long, global = true, env = "KGQA_QU_URL")]
    qu_url: Option<String>,
    /// Remote whole-label embedding service.
    #[arg(long, global = true, env = "KGQA_COARSE_URL")]
    coarse_url: Option<String>,
    /// Run against the bundled DBpedia slice and word vectors.
    #[arg(long, global = true, env = "KGQA_FIXTURE", conflicts_with = "endpoint")]
    fixture: bool,
    /// Write every linking probe to this file as JSON lines.
    #[arg(long, global = true, env = "KGQA_PROBE_LOG")]
    probe_log: Option<PathBuf>,
}

impl Settings {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            endpoint_url: self.endpoint.clone(),
            dialect: self.dialect,
            embeddings: self.embeddings.clone(),
            max_vr: self.max_vr,
            k_vertices: self.k_vertices,
            k_predicates: self.k_predicates,
            max_queries: self.max_queries,
            tau: self.tau,
            parallelism: self.parallelism,
            qu_url: self.qu_url.clone(),
            coarse_url: self.coarse_url.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Answer one question.
    Answer {
        question: String,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Score a benchmark file of questions and gold answers.
    Bench {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long, env = "KGQA_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Append one JSON line per request to this file.
        #[arg(long, env = "KGQA_REQUEST_LOG")]
        request_log: Option<PathBuf>,
    },
    /// Serve an N-Triples file (default: the bundled slice) as a SPARQL endpoint.
    FixtureServe {
        #[arg(long, default_value = "127.0.0.1:8890")]
        addr: SocketAddr,
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

type BoxError = Box<dyn std::error::Error>;

/// Builds the engine. With `--fixture`, also starts the fixture endpoint,
/// which lives as long as the returned handle.
async fn build_engine(settings: &Settings) -> Result<(Engine, Option<FixtureServer>), BoxError> {
    let mut config = match &settings.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    config.apply(&settings.overrides());
    if !settings.fixture {
        return Ok((Engine::new(config)?, None));
    }
    let server = FixtureServer::spawn(dbpedia_slice(), FixtureOptions::default()).await?;
    config.endpoint.url = server.url();
    let engine = if config.embedding_path.is_some() {
        Engine::new(config)?
    } else {
        Engine::with_store(config, EmbeddingStore::parse(EMBEDDINGS)?)?
    };
    Ok((engine, Some(server)))
}

fn write_probe_log(settings: &Settings, engine: &Engine) -> Result<(), BoxError> {
    if let Some(path) = &settings.probe_log {
        std::fs::write(path, engine.probe_log().to_json_lines())?;
    }
    Ok(())
}

async fn run(cli: Cli) -> Result<(), BoxError> {
    match cli.command {
        Command::Answer { question, json } => {
            let (engine, _fixture) = build_engine(&cli.settings).await?;
            let outcome = answer_question(&engine, &question).await;
            write_probe_log(&cli.settings, &engine)?;
            let outcome = outcome?;
            if json {
                println!("{}", serde_json::to_string_pretty(&outcome)?);
                return Ok(());
            }
            match outcome.answers.boolean {
                Some(b) => println!("{b}"),
                None if outcome.answers.kept.is_empty() => println!("(no answers)"),
                None => outcome.answers.kept.iter().for_each(|a| println!("{}", a.term)),
            }
            for d in &outcome.diagnostics {
                eprintln!("note: {d}");
            }
            let t = outcome.timings;
            eprintln!(
                "understanding {:.3}s, linking {:.3}s, execution {:.3}s, total {:.3}s",
                t.understanding.as_secs_f64(),
                t.linking.as_secs_f64(),
                t.execution.as_secs_f64(),
                t.total.as_secs_f64()
            );
        }
        Command::Bench { file, json } => {
            let text = std::fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            let items = parse_benchmark(&text).map_err(|e| format!("{}: {e}", file.display()))?;
            let (engine, _fixture) = build_engine(&cli.settings).await?;
            let report = run_benchmark(&engine, &items).await;
            write_probe_log(&cli.settings, &engine)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
                return Ok(());
            }
            println!("{:>6} {:>6} {:>6}  question", "P", "R", "F1");
            for q in &report.evaluation.per_question {
                println!("{:>6.3} {:>6.3} {:>6.3}  {}", q.scores.p, q.scores.r, q.scores.f1, q.question);
                if let Some(e) = &q.error {
                    println!("{:>22}{e}", "");
                }
            }
            let m = report.evaluation.macro_scores;
            println!("{:>6.3} {:>6.3} {:>6.3}  macro", m.p, m.r, m.f1);
        }
        Command::Serve { addr, request_log } => {
            let (engine, _fixture) = build_engine(&cli.settings).await?;
            let log = request_log.as_deref().map(RequestLog::create).transpose()?;
            let state = Arc::new(AppState { engine, log });
            let listener = tokio::net::TcpListener::bind(addr).await?;
            eprintln!("listening on http://{}", listener.local_addr()?);
            axum::serve(listener, router(state.clone()))
                .with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
            write_probe_log(&cli.settings, &state.engine)?;
        }
        Command::FixtureServe { addr, data } => {
            let store = match data {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    TripleStore::from_ntriples(&text).map_err(|e| format!("{}: {e}", path.display()))?
                }
                None => dbpedia_slice(),
            };
            let server = FixtureServer::spawn_on(addr, store, FixtureOptions::default()).await?;
            eprintln!("SPARQL endpoint at {}", server.url());
            tokio::signal::ctrl_c().await?;
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
