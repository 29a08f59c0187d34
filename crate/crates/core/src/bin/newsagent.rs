use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use chrono::Utc;
use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use newsagent::query::{execute, parse, Params, ResultRow};
use newsagent::service::{serve, Agent, ServiceConfig, ServiceError};

#[derive(Parser)]
#[command(name = "newsagent", version, about = "Conversational news search over an entity graph")]
struct Cli {
    /// TOML config file; `NEWSAGENT_<KEY>` environment variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Graph snapshot to load before and save after state-changing commands.
    #[arg(long, global = true)]
    snapshot: Option<PathBuf>,
    /// Gazetteer file for entity linking.
    #[arg(long, global = true)]
    gazetteer: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve,
    /// Ingest one feed.
    Ingest {
        #[arg(long, conflicts_with = "file", required_unless_present = "file")]
        source: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run a named template or a raw query and print JSON lines.
    Query {
        #[arg(long, conflicts_with = "raw", required_unless_present = "raw")]
        template: Option<String>,
        #[arg(long)]
        raw: Option<String>,
        /// Parameter binding, `name=value`; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, String)>,
    },
    /// Talk to the agent on stdin/stdout.
    Chat {
        #[arg(long)]
        lang: Option<String>,
    },
    /// Save or load a graph snapshot.
    Snapshot {
        #[command(subcommand)]
        action: SnapshotAction,
    },
    /// Print node and edge counts.
    Stats,
}

#[derive(Subcommand)]
enum SnapshotAction {
    Save { path: PathBuf },
    Load { path: PathBuf },
}

fn parse_param(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    if k.is_empty() {
        return Err("empty parameter name".into());
    }
    Ok((k.to_string(), v.to_string()))
}

fn load_config(cli: &Cli) -> Result<ServiceConfig, ServiceError> {
    let mut config = match &cli.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::from_toml("", std::env::vars())?,
    };
    if cli.snapshot.is_some() {
        config.snapshot = cli.snapshot.clone();
    }
    if cli.gazetteer.is_some() {
        config.gazetteer = cli.gazetteer.clone();
    }
    Ok(config)
}

fn row_json(row: &ResultRow) -> Value {
    let map: Map<String, Value> = row
        .0
        .iter()
        .map(|(var, node)| (var.clone(), serde_json::to_value(node).unwrap_or(Value::Null)))
        .collect();
    Value::Object(map)
}

fn persist(agent: &Agent) -> Result<(), ServiceError> {
    match &agent.settings.snapshot {
        Some(path) => agent.save_snapshot(path),
        None => Ok(()),
    }
}

fn chat(agent: &Agent, lang: Option<&str>) -> Result<(), ServiceError> {
    let (mut session, greeting) = agent.open_session("cli", lang, Utc::now())?;
    let mut out = std::io::stdout().lock();
    let io = |e: std::io::Error| ServiceError::Config(e.to_string());
    writeln!(out, "{}", greeting.text).map_err(io)?;
    for line in std::io::stdin().lock().lines() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = agent.turn(&mut session, &line, Utc::now())?;
        if !reply.response.text.is_empty() {
            writeln!(out, "{}", reply.response.text).map_err(io)?;
        }
        for d in &reply.response.directives {
            writeln!(out, "[{}]", d.as_str()).map_err(io)?;
        }
        if reply.debug.as_ref().is_some_and(|d| d.intent == "goodbye") {
            break;
        }
    }
    Ok(())
}

async fn run(cli: Cli) -> Result<(), ServiceError> {
    let config = load_config(&cli)?;
    let agent = Agent::from_config(&config)?;
    match cli.command {
        Command::Serve => {
            serve(Arc::new(agent), &config.listen, config.static_dir.clone(), config.schedule).await?;
        }
        Command::Ingest { source, file } => {
            let report = match (source, file) {
                (Some(id), _) => agent.trigger_ingest(&id).await?,
                (None, Some(path)) => agent.ingest_file(&path).await?,
                (None, None) => unreachable!("clap enforces one of --source/--file"),
            };
            persist(&agent)?;
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
        }
        Command::Query { template, raw, params } => {
            let params: Params = params.into_iter().collect();
            let store = agent.graph.read()?;
            let rows = match (template, raw) {
                (Some(name), _) => agent.templates.run_template(&name, &params, &store)?,
                (None, Some(q)) => execute(&parse(&q)?, &params, &store)?,
                (None, None) => unreachable!("clap enforces one of --template/--raw"),
            };
            for row in &rows {
                println!("{}", row_json(row));
            }
        }
        Command::Chat { lang } => chat(&agent, lang.as_deref())?,
        Command::Snapshot { action } => match action {
            SnapshotAction::Save { path } => {
                agent.save_snapshot(&path)?;
                println!("{}", json!({ "saved": path }));
            }
            SnapshotAction::Load { path } => {
                agent.load_snapshot(&path)?;
                persist(&agent)?;
                let stats = agent.graph.read()?.stats();
                println!("{}", json!({ "loaded": path, "stats": stats }));
            }
        },
        Command::Stats => {
            let stats = agent.graph.read()?.stats();
            println!("{}", serde_json::to_string(&stats).expect("stats serialize"));
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
