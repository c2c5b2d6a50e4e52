//! Command implementations behind the `kgqa` binary.

use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use kgqa_core::eval::{
    evaluate_retrieval, gold_echo_backend, run_robustness, MetricsReport, RobustnessClassifier,
    WrongQuerySource,
};
use kgqa_core::graph::render_schema_text;
use kgqa_core::pipeline::{Pipeline, PipelineKind, PipelineOptions, PipelineResponse, Status};

use crate::api::{router, AppState};
use crate::config::{Config, ConfigError};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PIPELINE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Other(String),
}

pub fn ingest(cfg: &Config, out: Option<&Path>, w: &mut dyn Write) -> Result<i32, CommandError> {
    let res = cfg.load_resources()?;
    writeln!(w, "nodes: {}", res.graph.node_count())?;
    writeln!(w, "edges: {}", res.graph.edge_count())?;
    writeln!(w, "node types: {}", res.schema.node_types.len())?;
    writeln!(w, "relationship types: {}", res.schema.rel_types.len())?;
    let schema = render_schema_text(&res.schema);
    match out {
        Some(path) => {
            std::fs::write(path, &schema)?;
            writeln!(w, "schema written to {}", path.display())?;
        }
        None => write!(w, "{schema}")?,
    }
    Ok(EXIT_OK)
}

pub struct AskArgs {
    pub question: String,
    pub pipeline: Option<PipelineKind>,
    pub entity_enhancement: bool,
    pub evidence: bool,
    pub json: bool,
}

fn print_evidence(resp: &PipelineResponse, w: &mut dyn Write) -> io::Result<()> {
    let ev = &resp.evidence;
    if let Some(q) = &ev.rewritten_question {
        writeln!(w, "\nRewritten question: {q}")?;
    }
    for s in &ev.ee_sentences {
        writeln!(w, "Entity: {s}")?;
    }
    if let Some(c) = &ev.generated_cypher {
        writeln!(w, "\nGenerated Cypher:\n{}", c.trim_end())?;
    }
    if let Some(c) = &ev.preprocessed_cypher {
        writeln!(w, "\nPreprocessed Cypher:\n{}", c.trim_end())?;
    }
    if !ev.change_log.entries.is_empty() || !ev.change_log.notes.is_empty() {
        writeln!(w, "\nChanges:")?;
        for e in &ev.change_log.entries {
            writeln!(
                w,
                "  {} @{}: {:?} -> {:?}",
                e.step, e.position, e.before, e.after
            )?;
        }
        for n in &ev.change_log.notes {
            writeln!(w, "  {}: {}", n.step, n.message)?;
        }
    }
    if resp.pipeline_kind == PipelineKind::Hybrid && resp.status == Status::Answered {
        writeln!(w, "\nGraph rows ({}):", ev.graph_rows.len())?;
        write!(w, "{}", ev.graph_rows.render_text())?;
        writeln!(
            w,
            "\nSubgraph: {} nodes / {} edges",
            ev.subgraph.nodes.len(),
            ev.subgraph.edges.len()
        )?;
    }
    if let Some(e) = &ev.error {
        writeln!(w, "\nError in {:?}: {}", e.stage, e.message)?;
    }
    Ok(())
}

pub fn ask(cfg: &Config, args: &AskArgs, w: &mut dyn Write) -> Result<i32, CommandError> {
    let pipeline = cfg.pipeline()?;
    let mut options = cfg.pipeline.clone();
    if let Some(k) = args.pipeline {
        options.pipeline_kind = k;
    }
    options.entity_enhancement |= args.entity_enhancement;
    let resp = pipeline.answer(&args.question, &options);
    if args.json {
        let mut v = serde_json::to_value(&resp).expect("response serializes");
        if !args.evidence {
            if let Some(m) = v.as_object_mut() {
                m.remove("evidence");
            }
        }
        writeln!(w, "{}", serde_json::to_string_pretty(&v).expect("json"))?;
    } else {
        writeln!(w, "{}", resp.answer)?;
        if args.evidence {
            writeln!(
                w,
                "\nStatus: {}",
                serde_json::to_value(resp.status).expect("status")
            )?;
            print_evidence(&resp, w)?;
        }
    }
    Ok(match resp.status {
        Status::Answered | Status::SchemaError => EXIT_OK,
        Status::ParseError | Status::BackendError => EXIT_PIPELINE,
    })
}

pub struct EvalArgs {
    pub dataset: Option<PathBuf>,
    pub entity_enhancement: bool,
    pub robustness: bool,
    pub gold_echo: bool,
    pub parallelism: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn eval(cfg: &Config, args: &EvalArgs, w: &mut dyn Write) -> Result<i32, CommandError> {
    let mut cfg = cfg.clone();
    if let Some(d) = &args.dataset {
        cfg.eval.dataset = Some(d.clone());
    }
    let samples = cfg.dataset()?;
    let res = cfg.load_resources()?;
    let backend = if args.gold_echo {
        Arc::new(gold_echo_backend(&samples, Some(&res.vocabulary)))
    } else {
        cfg.backend(&res)?
    };
    let pipeline = Pipeline::from_resources(&res, backend);
    let options = PipelineOptions {
        entity_enhancement: cfg.pipeline.entity_enhancement || args.entity_enhancement,
        ..cfg.pipeline.clone()
    };
    let parallelism = args.parallelism.unwrap_or(cfg.eval.parallelism);
    let report: MetricsReport = if args.robustness {
        run_robustness(
            &samples,
            &pipeline,
            &WrongQuerySource::CyclicShift,
            &RobustnessClassifier::default(),
            &options,
            parallelism,
        )
    } else {
        evaluate_retrieval(&samples, &pipeline, &options, parallelism)
    };
    let table = report.render_table();
    write!(w, "{table}")?;
    writeln!(
        w,
        "scored {} of {} samples ({} skipped)",
        report.scored,
        report.per_sample.len(),
        report.skipped
    )?;
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_json())?;
        let table_path = out.with_extension("txt");
        std::fs::write(&table_path, &table)?;
        writeln!(
            w,
            "report written to {} and {}",
            out.display(),
            table_path.display()
        )?;
    }
    Ok(EXIT_OK)
}

/// Binds, starts answering, and loads the graph in the background; health
/// reports 503 until loading completes.
pub async fn serve(cfg: Config, bind: Option<String>) -> Result<i32, CommandError> {
    let addr: SocketAddr = bind
        .unwrap_or_else(|| cfg.server.bind.clone())
        .parse()
        .map_err(|e| CommandError::Other(format!("invalid bind address: {e}")))?;
    let state = Arc::new(AppState::new(
        cfg.pipeline.clone(),
        cfg.server.max_concurrent,
    ));
    let app = router(state.clone(), &cfg.server.cors_origins);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    let loader = tokio::task::spawn_blocking(move || cfg.pipeline());
    let installer = state.clone();
    tokio::spawn(async move {
        match loader.await {
            Ok(Ok(p)) => {
                installer.install(p);
                eprintln!("graph loaded");
            }
            Ok(Err(e)) => {
                eprintln!("error: {e}");
                std::process::exit(EXIT_CONFIG);
            }
            Err(e) => {
                eprintln!("error: loader failed: {e}");
                std::process::exit(EXIT_CONFIG);
            }
        }
    });
    axum::serve(listener, app).await?;
    Ok(EXIT_OK)
}
