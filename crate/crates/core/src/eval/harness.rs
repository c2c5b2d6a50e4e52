use rayon::prelude::*;

use super::{
    row_set_metrics, EvalSample, MetricsReport, ReferencePoint, ReportKind, ReportMetadata,
    RetrievalMetrics, RobustnessClassifier, RobustnessCounts, SampleRecord, WrongQuerySource,
};
use crate::cypher;
use crate::entity::{self, Vocabulary};
use crate::llm::{Purpose, Reply, ScriptRule, ScriptedBackend};
use crate::pipeline::{Pipeline, PipelineKind, PipelineOptions, Status, SubgraphMode};

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn bounded_map<T, R, F>(items: &[T], parallelism: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| items.par_iter().map(&f).collect())
}

fn skipped_record(s: &EvalSample) -> SampleRecord {
    SampleRecord {
        id: s.id.clone(),
        question: s.question.clone(),
        metrics: None,
        verdict: None,
        status: None,
        query: None,
        answer: None,
        note: Some(format!(
            "unsupported gold query: {}",
            s.unsupported.as_deref().unwrap_or_default()
        )),
    }
}

fn metadata(kind: ReportKind, pipeline: &Pipeline, ee: bool, parallelism: usize) -> ReportMetadata {
    ReportMetadata {
        kind,
        model: pipeline.backend().name().to_string(),
        entity_enhancement: ee,
        generated_at: now(),
        averaging: "macro".into(),
        parallelism: parallelism.max(1),
        reference: match kind {
            ReportKind::Retrieval => ReferencePoint::retrieval(),
            ReportKind::Robustness => ReferencePoint::robustness(),
        },
    }
}

/// Scores the generated query's rows against the gold query's rows per sample.
///
/// Runs the hybrid pipeline with verbalization and subgraph extraction off.
/// A sample whose run does not reach execution scores 0 and carries a note.
/// Samples with unsupported gold queries are listed but not scored.
pub fn evaluate_retrieval(
    samples: &[EvalSample],
    pipeline: &Pipeline,
    options: &PipelineOptions,
    parallelism: usize,
) -> MetricsReport {
    let opts = PipelineOptions {
        verbalize: false,
        subgraph_mode: SubgraphMode::Off,
        pipeline_kind: PipelineKind::Hybrid,
        ..options.clone()
    };
    let per_sample = bounded_map(samples, parallelism, |s| {
        if !s.is_supported() {
            return skipped_record(s);
        }
        let gold_query = cypher::parse(&s.gold_cypher).expect("supported gold query parses");
        let gold = cypher::execute(&gold_query, pipeline.graph());
        let resp = pipeline.answer(&s.question, &opts);
        let (metrics, note) = if resp.status == Status::Answered {
            (row_set_metrics(&resp.evidence.graph_rows, &gold), None)
        } else {
            let msg = resp
                .evidence
                .error
                .as_ref()
                .map(|e| e.message.clone())
                .unwrap_or_else(|| resp.answer.clone());
            (RetrievalMetrics::ZERO, Some(msg))
        };
        SampleRecord {
            id: s.id.clone(),
            question: s.question.clone(),
            metrics: Some(metrics),
            verdict: None,
            status: Some(resp.status),
            query: resp
                .evidence
                .preprocessed_cypher
                .or(resp.evidence.generated_cypher),
            answer: None,
            note,
        }
    });
    let scored = per_sample.iter().filter(|r| r.metrics.is_some()).count();
    let mut report = MetricsReport {
        metadata: metadata(
            ReportKind::Retrieval,
            pipeline,
            options.entity_enhancement,
            parallelism,
        ),
        skipped: per_sample.len() - scored,
        scored,
        per_sample,
        aggregate: RetrievalMetrics::ZERO,
        robustness: None,
    };
    report.aggregate = report.recompute_aggregate();
    report
}

/// Feeds each question a deliberately wrong query, verbalizes the rows
/// against the original question and classifies the answer.
///
/// Only samples with supported gold queries take part; the wrong queries
/// are drawn from that subset.
pub fn run_robustness(
    samples: &[EvalSample],
    pipeline: &Pipeline,
    source: &WrongQuerySource,
    classifier: &RobustnessClassifier,
    options: &PipelineOptions,
    parallelism: usize,
) -> MetricsReport {
    let opts = PipelineOptions {
        verbalize: true,
        subgraph_mode: SubgraphMode::Off,
        pipeline_kind: PipelineKind::Hybrid,
        ..options.clone()
    };
    let supported: Vec<EvalSample> = samples
        .iter()
        .filter(|s| s.is_supported())
        .cloned()
        .collect();
    let wrong = source.queries(&supported);
    let jobs: Vec<(&EvalSample, &String)> = supported.iter().zip(&wrong).collect();
    let mut results = bounded_map(&jobs, parallelism, |(s, q)| {
        let resp = pipeline.answer_with_query(&s.question, q, &opts);
        let answered = resp.status == Status::Answered;
        SampleRecord {
            id: s.id.clone(),
            question: s.question.clone(),
            metrics: None,
            verdict: answered.then(|| classifier.classify(&resp.answer)),
            status: Some(resp.status),
            query: Some((*q).clone()),
            note: (!answered).then(|| {
                resp.evidence
                    .error
                    .as_ref()
                    .map(|e| e.message.clone())
                    .unwrap_or_default()
            }),
            answer: Some(resp.answer),
        }
    })
    .into_iter();

    let mut counts = RobustnessCounts::default();
    let mut per_sample = Vec::with_capacity(samples.len());
    for s in samples {
        if !s.is_supported() {
            per_sample.push(skipped_record(s));
            continue;
        }
        let rec = results.next().expect("one result per supported sample");
        match rec.verdict {
            Some(v) => counts.add(v),
            None => counts.failed += 1,
        }
        per_sample.push(rec);
    }
    MetricsReport {
        metadata: metadata(
            ReportKind::Robustness,
            pipeline,
            options.entity_enhancement,
            parallelism,
        ),
        scored: supported.len(),
        skipped: samples.len() - supported.len(),
        per_sample,
        aggregate: RetrievalMetrics::ZERO,
        robustness: Some(counts),
    }
}

/// A scripted backend that answers every dataset question with its gold
/// query and verbalizes by echoing rows.
///
/// With a vocabulary, questions are also matched in their entity-linked
/// form so runs with entity enhancement hit the same rules.
pub fn gold_echo_backend(samples: &[EvalSample], vocab: Option<&Vocabulary>) -> ScriptedBackend {
    let mut rules = Vec::new();
    for s in samples {
        let reply = Reply::Text(s.gold_cypher.clone());
        rules.push(ScriptRule::new(Purpose::CypherGen, reply.clone()).when_question(&s.question));
        if let Some(v) = vocab {
            let mentions = entity::extract(&s.question, v);
            if let Ok(rewritten) = entity::rewrite_question(&s.question, &mentions) {
                if rewritten != s.question {
                    rules.push(ScriptRule::new(Purpose::CypherGen, reply).when_question(rewritten));
                }
            }
        }
    }
    rules.push(ScriptRule::new(Purpose::Verbalize, Reply::EchoRows));
    ScriptedBackend::new(rules).named("gold-echo")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::pink1_graph;
    use crate::graph::{extract_schema, KvMap, ParentChildMap};
    use std::sync::Arc;

    fn sample(id: &str, q: &str, cypher: &str) -> EvalSample {
        EvalSample {
            id: id.into(),
            question: q.into(),
            gold_cypher: cypher.into(),
            expected_answer: String::new(),
            expected_nodes: vec![],
            expected_relationships: vec![],
            unsupported: cypher::parse(cypher).err().map(|e| e.to_string()),
        }
    }

    fn pipeline(backend: ScriptedBackend) -> Pipeline {
        let g = pink1_graph();
        let schema = extract_schema(&g, &KvMap::default(), &ParentChildMap::default());
        Pipeline::new(Arc::new(g), schema, Arc::new(backend))
    }

    fn samples() -> Vec<EvalSample> {
        vec![
            sample(
                "1",
                "Which diseases are associated with pink1?",
                "MATCH (g:gene_or_protein {name: 'pink1'})-[:associated_with]-(d:disease) RETURN d.name",
            ),
            sample("2", "How many nodes?", "MATCH (n) RETURN count(n)"),
            sample("3", "Unsupported?", "MATCH (n) WITH n RETURN n"),
        ]
    }

    #[test]
    fn gold_echo_is_perfect_and_skips_unsupported() {
        let s = samples();
        let p = pipeline(gold_echo_backend(&s, None));
        let r = evaluate_retrieval(&s, &p, &PipelineOptions::default(), 2);
        assert_eq!(r.aggregate, RetrievalMetrics::PERFECT);
        assert_eq!((r.scored, r.skipped), (2, 1));
        assert_eq!(r.metadata.model, "gold-echo");
        assert!(r.per_sample[2]
            .note
            .as_deref()
            .unwrap()
            .contains("unsupported"));
    }

    #[test]
    fn failures_score_zero_without_aborting() {
        let s = samples();
        let p = pipeline(ScriptedBackend::new(vec![]));
        let r = evaluate_retrieval(&s, &p, &PipelineOptions::default(), 1);
        assert_eq!(r.aggregate, RetrievalMetrics::ZERO);
        assert_eq!(r.per_sample[0].status, Some(Status::BackendError));
        assert!(r.per_sample[0].note.is_some());
        assert!((r.recompute_aggregate().iou - r.aggregate.iou).abs() < 1e-9);
    }

    #[test]
    fn robustness_with_constant_denial() {
        let s = samples();
        let p = pipeline(ScriptedBackend::new(vec![ScriptRule::new(
            Purpose::Verbalize,
            Reply::Text("I don't know.".into()),
        )]));
        let r = run_robustness(
            &s,
            &p,
            &WrongQuerySource::CyclicShift,
            &RobustnessClassifier::default(),
            &PipelineOptions::default(),
            2,
        );
        let c = r.robustness.unwrap();
        assert_eq!((c.denied, c.uncertain, c.full, c.failed), (2, 0, 0, 0));
        assert_eq!(
            r.per_sample[0].query.as_deref(),
            Some(s[1].gold_cypher.as_str())
        );
        assert!(r.render_table().contains("Answer Denied | 2/2 (100.0)"));
    }
}
