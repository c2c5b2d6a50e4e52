//! Question answering: entity enhancement, query generation, rewriting,
//! execution, subgraph evidence and verbalization.

mod resources;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cypher::{self, GraphStore, Query, ResultTable, Value};
use crate::entity::{self, EntityMention, Vocabulary};
use crate::graph::{
    render_descriptions_text, render_structure_text, GraphEdge, GraphNode, GraphSchema,
    PropertyGraph,
};
use crate::llm::{
    detect_schema_error, strip_code_fences, ChatBackend, PromptBuilder, PromptBundle,
    SchemaErrorSignal,
};
use crate::preprocess::{ChangeLog, LocalSynonyms, PreprocessError, Preprocessor, SynonymProvider};

pub use resources::{ResourceError, ResourcePaths, Resources};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Hybrid,
    LlmOnly,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 2] = [PipelineKind::Hybrid, PipelineKind::LlmOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hybrid => "hybrid",
            Self::LlmOnly => "llm_only",
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PipelineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown pipeline `{s}` (expected hybrid or llm_only)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgraphMode {
    Llm,
    #[default]
    Deterministic,
    Off,
}

impl FromStr for SubgraphMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "llm" => Ok(Self::Llm),
            "deterministic" => Ok(Self::Deterministic),
            "off" => Ok(Self::Off),
            other => Err(format!("unknown subgraph mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    pub entity_enhancement: bool,
    pub subgraph_mode: SubgraphMode,
    pub verbalize: bool,
    pub pipeline_kind: PipelineKind,
    pub verbalize_temperature: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            entity_enhancement: false,
            subgraph_mode: SubgraphMode::Deterministic,
            verbalize: true,
            pipeline_kind: PipelineKind::Hybrid,
            verbalize_temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Answered,
    SchemaError,
    ParseError,
    BackendError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    EntityLinking,
    CypherGeneration,
    Preprocessing,
    Execution,
    Subgraph,
    Verbalization,
    DirectAnswer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgraphSource {
    Deterministic,
    Llm,
    /// The LLM rewrite was rejected and the deterministic one used.
    DeterministicFallback,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Subgraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<SubgraphSource>,
    /// The query that produced the subgraph.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
}

impl Subgraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub question: String,
    /// Question after preferred-term substitution, when EE ran.
    pub rewritten_question: Option<String>,
    pub mentions: Vec<EntityMention>,
    pub ee_sentences: Vec<String>,
    pub generated_cypher: Option<String>,
    pub preprocessed_cypher: Option<String>,
    pub change_log: ChangeLog,
    pub graph_rows: ResultTable,
    pub subgraph: Subgraph,
    pub prompts: Vec<PromptBundle>,
    pub schema_error: Option<SchemaErrorSignal>,
    pub error: Option<StageError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResponse {
    pub answer: String,
    pub status: Status,
    pub pipeline_kind: PipelineKind,
    pub evidence: EvidenceBundle,
    pub timings: Vec<StageTiming>,
}

/// Shared, immutable state for answering questions.
#[derive(Clone)]
pub struct Pipeline {
    graph: Arc<PropertyGraph>,
    store: Arc<dyn GraphStore>,
    schema: Arc<GraphSchema>,
    structure_text: String,
    descriptions_text: String,
    vocab: Arc<Vocabulary>,
    synonyms: Arc<dyn SynonymProvider>,
    preprocessor: Arc<Preprocessor>,
    prompts: Arc<PromptBuilder>,
    backend: Arc<dyn ChatBackend>,
}

struct Run {
    evidence: EvidenceBundle,
    timings: Vec<StageTiming>,
    kind: PipelineKind,
}

impl Run {
    fn new(question: &str, kind: PipelineKind) -> Self {
        Self {
            evidence: EvidenceBundle {
                question: question.to_string(),
                ..Default::default()
            },
            timings: Vec::new(),
            kind,
        }
    }

    fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage,
            millis: start.elapsed().as_secs_f64() * 1000.0,
        });
        out
    }

    fn finish(self, status: Status, answer: String) -> PipelineResponse {
        PipelineResponse {
            answer,
            status,
            pipeline_kind: self.kind,
            evidence: self.evidence,
            timings: self.timings,
        }
    }

    fn fail(mut self, status: Status, stage: Stage, message: String) -> PipelineResponse {
        self.evidence.error = Some(StageError {
            stage,
            message: message.clone(),
        });
        self.finish(status, message)
    }
}

impl Pipeline {
    /// A pipeline with an empty vocabulary and synonym map, default rewrite
    /// chain and built-in templates, executing on `graph` itself.
    pub fn new(
        graph: Arc<PropertyGraph>,
        schema: GraphSchema,
        backend: Arc<dyn ChatBackend>,
    ) -> Self {
        Self {
            store: graph.clone(),
            graph,
            structure_text: render_structure_text(&schema),
            descriptions_text: render_descriptions_text(&schema),
            schema: Arc::new(schema),
            vocab: Arc::new(Vocabulary::default()),
            synonyms: Arc::new(LocalSynonyms::default()),
            preprocessor: Arc::new(Preprocessor::default()),
            prompts: Arc::new(PromptBuilder::default()),
            backend,
        }
    }

    pub fn from_resources(res: &Resources, backend: Arc<dyn ChatBackend>) -> Self {
        Self::new(res.graph.clone(), res.schema.clone(), backend)
            .with_vocabulary(res.vocabulary.clone())
            .with_synonyms(res.synonyms.clone())
            .with_preprocessor(res.preprocessor.clone())
            .with_prompts(res.prompts.clone())
    }

    pub fn with_vocabulary(mut self, vocab: Vocabulary) -> Self {
        self.vocab = Arc::new(vocab);
        self
    }

    pub fn with_synonyms(mut self, synonyms: Arc<dyn SynonymProvider>) -> Self {
        self.synonyms = synonyms;
        self
    }

    pub fn with_preprocessor(mut self, p: Preprocessor) -> Self {
        self.preprocessor = Arc::new(p);
        self
    }

    pub fn with_prompts(mut self, p: PromptBuilder) -> Self {
        self.prompts = Arc::new(p);
        self
    }

    /// Executes queries through `store` instead of the embedded graph.
    pub fn with_store(mut self, store: Arc<dyn GraphStore>) -> Self {
        self.store = store;
        self
    }

    pub fn with_backend(mut self, backend: Arc<dyn ChatBackend>) -> Self {
        self.backend = backend;
        self
    }

    pub fn graph(&self) -> &PropertyGraph {
        &self.graph
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn schema(&self) -> &GraphSchema {
        &self.schema
    }

    pub fn backend(&self) -> &dyn ChatBackend {
        &*self.backend
    }

    pub fn prompts(&self) -> &PromptBuilder {
        &self.prompts
    }

    pub fn answer(&self, question: &str, options: &PipelineOptions) -> PipelineResponse {
        match options.pipeline_kind {
            PipelineKind::LlmOnly => self.answer_llm_only(question),
            PipelineKind::Hybrid => self.answer_hybrid(question, options),
        }
    }

    fn complete(
        &self,
        run: &mut Run,
        prompt: PromptBundle,
        temperature: f64,
    ) -> Result<String, String> {
        let t = prompt.purpose.fixed_temperature().unwrap_or(temperature);
        let result = self.backend.complete(&prompt, t);
        run.evidence.prompts.push(prompt);
        result.map_err(|e| e.to_string())
    }

    fn answer_llm_only(&self, question: &str) -> PipelineResponse {
        let mut run = Run::new(question, PipelineKind::LlmOnly);
        let prompt = self.prompts.direct_prompt(question);
        let start = Instant::now();
        let reply = self.complete(&mut run, prompt, 0.0);
        run.timings.push(StageTiming {
            stage: Stage::DirectAnswer,
            millis: start.elapsed().as_secs_f64() * 1000.0,
        });
        match reply {
            Ok(text) => run.finish(Status::Answered, text.trim().to_string()),
            Err(e) => run.fail(Status::BackendError, Stage::DirectAnswer, e),
        }
    }

    fn answer_hybrid(&self, question: &str, options: &PipelineOptions) -> PipelineResponse {
        let mut run = Run::new(question, PipelineKind::Hybrid);
        let mut prompt_question = question.to_string();
        if options.entity_enhancement {
            let vocab = self.vocab.clone();
            let linked = run.time(Stage::EntityLinking, || {
                let mentions = entity::extract(question, &vocab);
                let rewritten = entity::rewrite_question(question, &mentions)
                    .expect("extracted mentions are ordered and disjoint");
                let sentences = entity::enhancement_sentences(&mentions);
                (mentions, rewritten, sentences)
            });
            prompt_question = linked.1.clone();
            run.evidence.mentions = linked.0;
            run.evidence.rewritten_question = Some(linked.1);
            run.evidence.ee_sentences = linked.2;
        }

        let prompt = self.prompts.cypher_prompt(
            &self.structure_text,
            &prompt_question,
            &run.evidence.ee_sentences,
            &self.descriptions_text,
        );
        let start = Instant::now();
        let reply = self.complete(&mut run, prompt, 0.0);
        run.timings.push(StageTiming {
            stage: Stage::CypherGeneration,
            millis: start.elapsed().as_secs_f64() * 1000.0,
        });
        let raw = match reply {
            Ok(r) => r,
            Err(e) => return run.fail(Status::BackendError, Stage::CypherGeneration, e),
        };
        run.evidence.generated_cypher = Some(raw.clone());
        let cleaned = strip_code_fences(&raw);
        if let Some(signal) = detect_schema_error(&cleaned) {
            let answer = signal.explanation.clone();
            run.evidence.schema_error = Some(signal);
            return run.finish(Status::SchemaError, answer);
        }
        self.continue_from_query(run, question, &cleaned, options)
    }

    /// Runs the hybrid path with `cypher_text` in place of a generated query.
    pub fn answer_with_query(
        &self,
        question: &str,
        cypher_text: &str,
        options: &PipelineOptions,
    ) -> PipelineResponse {
        let mut run = Run::new(question, PipelineKind::Hybrid);
        run.evidence.generated_cypher = Some(cypher_text.to_string());
        self.continue_from_query(run, question, cypher_text, options)
    }

    fn continue_from_query(
        &self,
        mut run: Run,
        question: &str,
        cypher_text: &str,
        options: &PipelineOptions,
    ) -> PipelineResponse {
        let pre = run.time(Stage::Preprocessing, || {
            self.preprocessor
                .apply(cypher_text, &self.graph, &self.schema, &*self.synonyms)
        });
        let pre = match pre {
            Ok(p) => p,
            Err(PreprocessError::Parse { error, text, log }) => {
                run.evidence.preprocessed_cypher = Some(text);
                run.evidence.change_log = log;
                return run.fail(
                    Status::ParseError,
                    Stage::Preprocessing,
                    format!("the generated query could not be parsed: {error}"),
                );
            }
            Err(e) => return run.fail(Status::ParseError, Stage::Preprocessing, e.to_string()),
        };
        run.evidence.preprocessed_cypher = Some(pre.text.clone());
        run.evidence.change_log = pre.log;

        let rows = run.time(Stage::Execution, || self.store.run(&pre.text));
        let rows = match rows {
            Ok(r) => r,
            Err(e) => return run.fail(Status::BackendError, Stage::Execution, e.to_string()),
        };
        run.evidence.graph_rows = rows;

        if options.subgraph_mode != SubgraphMode::Off {
            let start = Instant::now();
            let sub = self.build_subgraph_with(&mut run, &pre.query, options.subgraph_mode);
            run.timings.push(StageTiming {
                stage: Stage::Subgraph,
                millis: start.elapsed().as_secs_f64() * 1000.0,
            });
            run.evidence.subgraph = sub;
        }

        if !options.verbalize {
            let answer = run.evidence.graph_rows.render_text();
            return run.finish(Status::Answered, answer);
        }
        let prompt = self
            .prompts
            .verbalization_prompt(question, &run.evidence.graph_rows);
        let start = Instant::now();
        let reply = self.complete(&mut run, prompt, options.verbalize_temperature);
        run.timings.push(StageTiming {
            stage: Stage::Verbalization,
            millis: start.elapsed().as_secs_f64() * 1000.0,
        });
        match reply {
            Ok(text) => run.finish(Status::Answered, text.trim().to_string()),
            Err(e) => run.fail(Status::BackendError, Stage::Verbalization, e),
        }
    }

    /// Nodes and edges supporting the answer to `query`.
    pub fn build_subgraph(
        &self,
        query: &Query,
        mode: SubgraphMode,
    ) -> (Subgraph, Vec<PromptBundle>) {
        let mut run = Run::new("", PipelineKind::Hybrid);
        let sub = self.build_subgraph_with(&mut run, query, mode);
        (sub, run.evidence.prompts)
    }

    fn build_subgraph_with(&self, run: &mut Run, query: &Query, mode: SubgraphMode) -> Subgraph {
        match mode {
            SubgraphMode::Off => Subgraph::default(),
            SubgraphMode::Deterministic => self.deterministic_subgraph(
                query,
                &run.evidence.graph_rows,
                SubgraphSource::Deterministic,
            ),
            SubgraphMode::Llm => {
                let original = cypher::format(query);
                let prompt = self.prompts.subgraph_prompt(&original);
                let accepted = self
                    .complete(run, prompt, 0.0)
                    .ok()
                    .map(|r| strip_code_fences(&r))
                    .and_then(|text| cypher::parse(&text).ok().map(|q| (text, q)))
                    .filter(|(_, q)| {
                        cypher::topology_signature(q) == cypher::topology_signature(query)
                            && returns_only_variables(q)
                    });
                match accepted.and_then(|(text, _)| self.store.run(&text).ok().map(|t| (text, t))) {
                    Some((text, table)) => {
                        let mut sub = self.collect_subgraph(&table, &run.evidence.graph_rows);
                        sub.source = Some(SubgraphSource::Llm);
                        sub.query = Some(text);
                        sub
                    }
                    None => self.deterministic_subgraph(
                        query,
                        &run.evidence.graph_rows,
                        SubgraphSource::DeterministicFallback,
                    ),
                }
            }
        }
    }

    fn deterministic_subgraph(
        &self,
        query: &Query,
        rows: &ResultTable,
        source: SubgraphSource,
    ) -> Subgraph {
        let rewritten = cypher::rewrite_return_all_bound(query);
        let text = cypher::format(&rewritten);
        let table = self.store.run(&text).unwrap_or_default();
        let mut sub = self.collect_subgraph(&table, rows);
        sub.source = Some(source);
        sub.query = Some(text);
        sub
    }

    /// Distinct nodes and edges in `table` and `rows`, plus edge endpoints.
    fn collect_subgraph(&self, table: &ResultTable, rows: &ResultTable) -> Subgraph {
        let mut nodes: BTreeMap<String, GraphNode> = BTreeMap::new();
        let mut edges: BTreeMap<(String, String, String), GraphEdge> = BTreeMap::new();
        fn visit(
            v: &Value,
            nodes: &mut BTreeMap<String, GraphNode>,
            edges: &mut BTreeMap<(String, String, String), GraphEdge>,
        ) {
            match v {
                Value::Node(n) => {
                    nodes.entry(n.id.clone()).or_insert_with(|| (**n).clone());
                }
                Value::Edge(e) => {
                    edges
                        .entry((e.source.clone(), e.rel_type.clone(), e.target.clone()))
                        .or_insert_with(|| (**e).clone());
                }
                Value::List(items) => items.iter().for_each(|i| visit(i, nodes, edges)),
                _ => {}
            }
        }
        for cell in table.rows.iter().chain(&rows.rows).flatten() {
            visit(cell, &mut nodes, &mut edges);
        }
        for e in edges.values() {
            for id in [&e.source, &e.target] {
                if !nodes.contains_key(id) {
                    if let Some(n) = self.graph.node_by_id(id) {
                        nodes.insert(id.clone(), (**n).clone());
                    }
                }
            }
        }
        Subgraph {
            nodes: nodes.into_values().collect(),
            edges: edges.into_values().collect(),
            source: None,
            query: None,
        }
    }
}

fn returns_only_variables(q: &Query) -> bool {
    q.ret
        .items
        .iter()
        .all(|i| matches!(i.expr, cypher::ast::Expr::Variable(_)))
}
