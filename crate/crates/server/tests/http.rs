use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use kgqa_core::pipeline::PipelineOptions;
use kgqa_server::{router, AppState, Config};

fn fixture(dir: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(dir)
        .join("kgqa.toml")
}

fn app(dir: &str) -> Router {
    let cfg = Config::load(&fixture(dir)).unwrap();
    let state = AppState::new(cfg.pipeline.clone(), cfg.server.max_concurrent)
        .with_pipeline(cfg.pipeline().unwrap());
    router(Arc::new(state), &cfg.server.cors_origins)
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Value, axum::http::HeaderMap) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let body = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, body, headers)
}

fn post(body: Value) -> Request<Body> {
    Request::post("/api/ask")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn get(path: &str) -> Request<Body> {
    Request::get(path).body(Body::empty()).unwrap()
}

#[tokio::test]
async fn pink1_question_answers_with_evidence() {
    let app = app("pink1");
    let (status, body, headers) = call(
        &app,
        post(
            json!({"question": "Which diseases are associated with pink1?", "request_id": "abc-1"}),
        ),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["request_id"], "abc-1");
    assert_eq!(headers["x-request-id"], "abc-1");
    assert_eq!(body["status"], "answered");
    let answer = body["answer"].as_str().unwrap();
    assert!(
        answer.contains("disease_a") && answer.contains("disease_b"),
        "{answer}"
    );
    let ev = &body["evidence"];
    assert_eq!(ev["graph_rows"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(ev["subgraph"]["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(ev["subgraph"]["edges"].as_array().unwrap().len(), 2);
    for field in [
        "generated_cypher",
        "preprocessed_cypher",
        "change_log",
        "prompts",
    ] {
        assert!(ev.get(field).is_some(), "missing {field}");
    }
}

#[tokio::test]
async fn compact_omits_evidence_and_ids_are_generated() {
    let app = app("pink1");
    let (_, body, _) = call(
        &app,
        post(json!({"question": "Which diseases are associated with pink1?", "compact": true})),
    )
    .await;
    assert!(body.get("evidence").is_none());
    assert!(body["request_id"].as_str().unwrap().starts_with("req-"));
    let req = Request::post("/api/ask")
        .header("x-request-id", "from-header")
        .body(Body::from(
            json!({"question": "q?", "compact": true}).to_string(),
        ))
        .unwrap();
    let (_, body, _) = call(&app, req).await;
    assert_eq!(body["request_id"], "from-header");
}

#[tokio::test]
async fn schema_error_is_200_with_explanation() {
    let app = app("pink1");
    let (status, body, _) = call(&app, post(json!({"question": "What is the weather?"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "schema_error");
    assert_eq!(
        body["answer"],
        "The knowledge graph only describes genes and diseases."
    );
    assert!(body["evidence"]["graph_rows"]["rows"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[tokio::test]
async fn llm_only_pipeline() {
    let app = app("pink1");
    let (status, body, _) = call(
        &app,
        post(json!({"question": "Which diseases are associated with pink1?", "pipeline": "llm_only"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["pipeline_kind"], "llm_only");
    assert_eq!(
        body["answer"],
        "PINK1 is linked to early-onset Parkinson disease."
    );
}

#[tokio::test]
async fn bad_requests_name_the_field() {
    let app = app("pink1");
    let (status, body, _) = call(&app, post(json!({}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["field"], "question");
    let (status, body, _) = call(&app, post(json!({"question": "q", "pipeline": "rag"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["field"], "pipeline");
    let (status, body, _) = call(
        &app,
        post(json!({"question": "q", "entity_enhancement": "yes"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["field"], "entity_enhancement");
    let req = Request::post("/api/ask")
        .body(Body::from("not json"))
        .unwrap();
    let (status, body, _) = call(&app, req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("invalid JSON"));
}

#[tokio::test]
async fn backend_failure_is_5xx() {
    let cfg = Config::load(&fixture("pink1")).unwrap();
    let mut bare = cfg.clone();
    bare.backend = kgqa_server::BackendConfig::Scripted { script: None };
    let state =
        AppState::new(PipelineOptions::default(), 2).with_pipeline(bare.pipeline().unwrap());
    let app = router(Arc::new(state), &[]);
    let (status, body, _) = call(&app, post(json!({"question": "anything?"}))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(body["status"], "backend_error");
}

#[tokio::test]
async fn pipelines_and_health() {
    let app = app("pink1");
    let (status, body, _) = call(&app, get("/api/pipelines")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!(["hybrid", "llm_only"]));
    for _ in 0..2 {
        let (status, body, _) = call(&app, get("/api/health")).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["nodes"], 3);
        assert_eq!(body["edges"], 2);
        assert_eq!(body["backend_reachable"], true);
    }
}

#[tokio::test]
async fn health_is_503_before_loading() {
    let state = Arc::new(AppState::new(PipelineOptions::default(), 1));
    let app = router(state.clone(), &["*".to_string()]);
    let (status, _, _) = call(&app, get("/api/health")).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, _, _) = call(&app, post(json!({"question": "q?"}))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, _, _) = call(&app, get("/api/pipelines")).await;
    assert_eq!(status, StatusCode::OK);
    state.install(Config::load(&fixture("pink1")).unwrap().pipeline().unwrap());
    let (status, _, _) = call(&app, get("/api/health")).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn cors_preflight_is_allowed() {
    let app = app("pink1");
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/api/ask")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert!(resp.status().is_success());
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}

#[tokio::test]
async fn concurrent_requests_all_complete() {
    let app = app("medkg");
    let questions = [
        "Which drugs have pterygium as a side effect?",
        "Which drugs are indicated for epilepsy?",
        "For which diseases is alcohol contraindicated?",
        "Which proteins interact with pink1?",
    ];
    let mut handles = Vec::new();
    for i in 0..16 {
        let app = app.clone();
        let q = questions[i % questions.len()];
        handles.push(tokio::spawn(async move {
            call(
                &app,
                post(json!({"question": q, "request_id": format!("r{i}"), "compact": true})),
            )
            .await
        }));
    }
    for (i, h) in handles.into_iter().enumerate() {
        let (status, body, _) = h.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["request_id"], format!("r{i}"));
        assert_eq!(body["status"], "answered");
    }
}
