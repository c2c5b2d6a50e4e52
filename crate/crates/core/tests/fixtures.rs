use std::path::{Path, PathBuf};
use std::sync::Arc;

use kgqa_core::cypher;
use kgqa_core::eval::{evaluate_retrieval, gold_echo_backend, load_dataset, RetrievalMetrics};
use kgqa_core::llm::ScriptedBackend;
use kgqa_core::pipeline::{Pipeline, PipelineOptions, ResourcePaths, Resources, Status};
use kgqa_core::preprocess::{ChangeLog, DeprecationRules};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn medkg_paths() -> ResourcePaths {
    ResourcePaths {
        nodes: "nodes.csv".into(),
        edges: "edges.csv".into(),
        preferred_terms: Some("preferred_terms.tsv".into()),
        descriptions: Some("descriptions.tsv".into()),
        parent_child: Some("parent_child.tsv".into()),
        vocabulary: Some("vocabulary.tsv".into()),
        synonyms: Some("synonyms.tsv".into()),
        external_synonyms: Some("wikidata_stub.json".into()),
        deprecations: Some("deprecations.tsv".into()),
        templates: None,
    }
    .resolve(&fixtures().join("medkg"))
}

fn corpus() -> Vec<String> {
    std::fs::read_to_string(fixtures().join("queries/corpus.cypher"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn medkg_loads_with_preferred_terms() {
    let res = Resources::load(&medkg_paths()).unwrap();
    assert_eq!(res.graph.node_count(), 36);
    assert!(res.graph.node_by_id("dr7").unwrap().name() == Some("aspirin"));
    for (_, entry) in res.vocabulary.iter() {
        assert!(
            res.graph
                .nodes()
                .iter()
                .any(|n| n.name() == Some(entry.preferred_term.as_str())),
            "vocabulary term {} missing from graph",
            entry.preferred_term
        );
    }
}

#[test]
fn dataset_parses_and_gold_queries_return_rows() {
    let res = Resources::load(&medkg_paths()).unwrap();
    let samples = load_dataset(&fixtures().join("medkg/dataset.jsonl")).unwrap();
    assert!(samples.len() >= 10);
    for s in &samples {
        assert!(s.is_supported(), "{}: {:?}", s.id, s.unsupported);
        let q = cypher::parse(&s.gold_cypher).unwrap();
        let rows = cypher::execute(&q, &res.graph);
        if s.id != "q14" {
            assert!(!rows.rows.is_empty(), "{} returned nothing", s.id);
        }
    }
}

#[test]
fn gold_echo_over_medkg_is_perfect_with_and_without_ee() {
    let res = Resources::load(&medkg_paths()).unwrap();
    let samples = load_dataset(&fixtures().join("medkg/dataset.jsonl")).unwrap();
    let backend = gold_echo_backend(&samples, Some(&res.vocabulary));
    let p = Pipeline::from_resources(&res, Arc::new(backend));
    for ee in [false, true] {
        let opts = PipelineOptions {
            entity_enhancement: ee,
            ..Default::default()
        };
        let r = evaluate_retrieval(&samples, &p, &opts, 4);
        assert_eq!(r.aggregate, RetrievalMetrics::PERFECT, "ee={ee}");
        assert!(r
            .render_table()
            .contains(if ee { "| True |" } else { "| False |" }));
    }
}

#[test]
fn scripted_model_is_repaired_by_preprocessing() {
    let res = Resources::load(&medkg_paths()).unwrap();
    let script = std::fs::read_to_string(fixtures().join("medkg/script.json")).unwrap();
    let backend = ScriptedBackend::from_json(&script).unwrap();
    let p = Pipeline::from_resources(&res, Arc::new(backend));
    let samples = load_dataset(&fixtures().join("medkg/dataset.jsonl")).unwrap();
    let r = evaluate_retrieval(&samples, &p, &PipelineOptions::default(), 2);
    assert_eq!(r.aggregate, RetrievalMetrics::PERFECT);

    let resp = p.answer(
        "For which diseases is alcohol contraindicated?",
        &PipelineOptions::default(),
    );
    assert_eq!(resp.status, Status::Answered);
    assert_eq!(resp.answer, "According to the knowledge graph: epilepsy.");
    let pre = resp.evidence.preprocessed_cypher.unwrap();
    assert!(pre.contains("\"ethanol\""), "{pre}");

    let off_topic = p.answer("What is the weather in Paris?", &PipelineOptions::default());
    assert_eq!(off_topic.status, Status::SchemaError);
    assert!(off_topic.evidence.graph_rows.rows.is_empty());
}

#[test]
fn corpus_round_trips_through_formatter() {
    for text in corpus() {
        let text = match cypher::parse(&text) {
            Ok(_) => text,
            Err(_) => DeprecationRules::default().apply(&text, &mut ChangeLog::default()),
        };
        let q = cypher::parse(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        let once = cypher::format(&q);
        let q2 = cypher::parse(&once).unwrap();
        assert_eq!(q, q2, "{text}");
        assert_eq!(cypher::format(&q2), once);
    }
}

#[test]
fn preprocessing_is_idempotent_and_replayable_over_corpus() {
    let res = Resources::load(&medkg_paths()).unwrap();
    for text in corpus() {
        let first = res
            .preprocessor
            .apply(&text, &res.graph, &res.schema, &*res.synonyms)
            .unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(first.log.replay(&text).unwrap(), first.text, "{text}");
        let second = res
            .preprocessor
            .apply(&first.text, &res.graph, &res.schema, &*res.synonyms)
            .unwrap();
        assert_eq!(second.text, first.text, "{text}");
        assert!(second.log.content_entries().next().is_none(), "{text}");
    }
}
