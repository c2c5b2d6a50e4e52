use std::path::PathBuf;

use clap::{Parser, Subcommand};

use kgqa_core::pipeline::PipelineKind;
use kgqa_server::commands::{self, AskArgs, EvalArgs, EXIT_CONFIG};
use kgqa_server::Config;

/// Knowledge-graph question answering.
#[derive(Parser)]
#[command(name = "kgqa", version)]
struct Cli {
    /// Service configuration (TOML).
    #[arg(long, global = true, default_value = "kgqa.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the graph files and print counts and the schema.
    Ingest {
        /// Write the rendered schema here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer one question.
    Ask {
        #[arg(long)]
        question: String,
        /// hybrid or llm_only.
        #[arg(long)]
        pipeline: Option<PipelineKind>,
        /// Turn on entity enhancement.
        #[arg(long)]
        ee: bool,
        /// Print the generated query, rows and subgraph.
        #[arg(long)]
        evidence: bool,
        /// Print the response as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the retrieval or robustness evaluation.
    Eval {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        ee: bool,
        /// Wrong-query robustness run instead of retrieval scoring.
        #[arg(long)]
        robustness: bool,
        /// Answer with the gold queries instead of the configured backend.
        #[arg(long)]
        gold_echo: bool,
        #[arg(long)]
        parallelism: Option<usize>,
        /// JSON report path; the text table goes next to it as .txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
}

fn run(cli: Cli) -> Result<i32, commands::CommandError> {
    let cfg = Config::load(&cli.config)?;
    let stdout = &mut std::io::stdout();
    match cli.command {
        Command::Ingest { out } => commands::ingest(&cfg, out.as_deref(), stdout),
        Command::Ask {
            question,
            pipeline,
            ee,
            evidence,
            json,
        } => commands::ask(
            &cfg,
            &AskArgs {
                question,
                pipeline,
                entity_enhancement: ee,
                evidence,
                json,
            },
            stdout,
        ),
        Command::Eval {
            dataset,
            ee,
            robustness,
            gold_echo,
            parallelism,
            out,
        } => commands::eval(
            &cfg,
            &EvalArgs {
                dataset,
                entity_enhancement: ee,
                robustness,
                gold_echo,
                parallelism,
                out,
            },
            stdout,
        ),
        Command::Serve { bind } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(commands::serve(cfg, bind))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    std::process::exit(code);
}
