//! HTTP routes: `POST /api/ask`, `GET /api/pipelines`, `GET /api/health`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Map, Value};
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use kgqa_core::pipeline::{Pipeline, PipelineKind, PipelineOptions, Status, SubgraphMode};

pub const REQUEST_ID_HEADER: &str = "x-request-id";

/// Shared service state. The pipeline slot stays empty until resources
/// finish loading; routes that need it answer 503 until then.
pub struct AppState {
    pipeline: RwLock<Option<Arc<Pipeline>>>,
    defaults: PipelineOptions,
    permits: Arc<Semaphore>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(defaults: PipelineOptions, max_concurrent: usize) -> Self {
        Self {
            pipeline: RwLock::new(None),
            defaults,
            permits: Arc::new(Semaphore::new(max_concurrent.max(1))),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn with_pipeline(self, pipeline: Pipeline) -> Self {
        self.install(pipeline);
        self
    }

    pub fn install(&self, pipeline: Pipeline) {
        *self.pipeline.write().expect("pipeline lock") = Some(Arc::new(pipeline));
    }

    pub fn pipeline(&self) -> Option<Arc<Pipeline>> {
        self.pipeline.read().expect("pipeline lock").clone()
    }
}

pub fn router(state: Arc<AppState>, cors_origins: &[String]) -> Router {
    let cors = if cors_origins.iter().any(|o| o == "*") {
        CorsLayer::new().allow_origin(Any)
    } else {
        let origins: Vec<HeaderValue> = cors_origins
            .iter()
            .filter_map(|o| HeaderValue::from_str(o).ok())
            .collect();
        CorsLayer::new().allow_origin(AllowOrigin::list(origins))
    }
    .allow_methods(Any)
    .allow_headers(Any);
    Router::new()
        .route("/api/ask", post(ask))
        .route("/api/pipelines", get(pipelines))
        .route("/api/health", get(health))
        .layer(cors)
        .with_state(state)
}

fn error(code: StatusCode, message: impl Into<String>, field: Option<&str>) -> Response {
    let mut body = json!({ "error": message.into() });
    if let Some(f) = field {
        body["field"] = json!(f);
    }
    (code, Json(body)).into_response()
}

fn bad_field(field: &str, message: &str) -> Response {
    error(
        StatusCode::BAD_REQUEST,
        format!("field `{field}`: {message}"),
        Some(field),
    )
}

struct AskRequest {
    question: String,
    options: PipelineOptions,
    request_id: Option<String>,
    compact: bool,
}

const ASK_FIELDS: [&str; 7] = [
    "question",
    "pipeline",
    "entity_enhancement",
    "subgraph_mode",
    "verbalize",
    "request_id",
    "compact",
];

fn optional_bool(obj: &Map<String, Value>, field: &str) -> Result<Option<bool>, Response> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Bool(b)) => Ok(Some(*b)),
        Some(_) => Err(bad_field(field, "expected a boolean")),
    }
}

fn optional_str<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<Option<&'a str>, Response> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(bad_field(field, "expected a string")),
    }
}

fn parse_ask(body: &[u8], defaults: &PipelineOptions) -> Result<AskRequest, Response> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| error(StatusCode::BAD_REQUEST, format!("invalid JSON: {e}"), None))?;
    let Value::Object(obj) = value else {
        return Err(error(
            StatusCode::BAD_REQUEST,
            "expected a JSON object",
            None,
        ));
    };
    if let Some(unknown) = obj.keys().find(|k| !ASK_FIELDS.contains(&k.as_str())) {
        return Err(bad_field(unknown, "unknown field"));
    }
    let question = match optional_str(&obj, "question")? {
        Some(q) if !q.trim().is_empty() => q.to_string(),
        Some(_) => return Err(bad_field("question", "must not be empty")),
        None => return Err(bad_field("question", "is required")),
    };
    let mut options = defaults.clone();
    if let Some(p) = optional_str(&obj, "pipeline")? {
        options.pipeline_kind = p
            .parse::<PipelineKind>()
            .map_err(|e| bad_field("pipeline", &e))?;
    }
    if let Some(m) = optional_str(&obj, "subgraph_mode")? {
        options.subgraph_mode = m
            .parse::<SubgraphMode>()
            .map_err(|e| bad_field("subgraph_mode", &e))?;
    }
    if let Some(b) = optional_bool(&obj, "entity_enhancement")? {
        options.entity_enhancement = b;
    }
    if let Some(b) = optional_bool(&obj, "verbalize")? {
        options.verbalize = b;
    }
    Ok(AskRequest {
        question,
        options,
        request_id: optional_str(&obj, "request_id")?.map(str::to_string),
        compact: optional_bool(&obj, "compact")?.unwrap_or(false),
    })
}

fn status_code(status: Status) -> StatusCode {
    match status {
        Status::Answered | Status::SchemaError | Status::ParseError => StatusCode::OK,
        Status::BackendError => StatusCode::BAD_GATEWAY,
    }
}

async fn ask(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Response {
    let req = match parse_ask(&body, &state.defaults) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let request_id = req
        .request_id
        .clone()
        .or_else(|| {
            headers
                .get(REQUEST_ID_HEADER)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        })
        .unwrap_or_else(|| format!("req-{}", state.next_id.fetch_add(1, Ordering::Relaxed)));
    let Some(pipeline) = state.pipeline() else {
        return error(
            StatusCode::SERVICE_UNAVAILABLE,
            "graph is still loading",
            None,
        );
    };
    let Ok(permit) = state.permits.clone().acquire_owned().await else {
        return error(
            StatusCode::SERVICE_UNAVAILABLE,
            "service is shutting down",
            None,
        );
    };
    let (question, options) = (req.question, req.options);
    let result = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        pipeline.answer(&question, &options)
    })
    .await;
    let resp = match result {
        Ok(r) => r,
        Err(e) => {
            return error(
                StatusCode::INTERNAL_SERVER_ERROR,
                format!("pipeline task failed: {e}"),
                None,
            )
        }
    };
    let code = status_code(resp.status);
    let mut body = serde_json::to_value(&resp).expect("response serializes");
    body["request_id"] = json!(request_id);
    if req.compact {
        if let Value::Object(map) = &mut body {
            map.remove("evidence");
        }
    }
    let mut out = (code, Json(body)).into_response();
    if let Ok(v) = HeaderValue::from_str(&request_id) {
        out.headers_mut().insert(REQUEST_ID_HEADER, v);
    }
    out
}

async fn pipelines() -> Json<Vec<&'static str>> {
    Json(PipelineKind::ALL.iter().map(|k| k.as_str()).collect())
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let Some(p) = state.pipeline() else {
        return (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "status": "loading" })),
        )
            .into_response();
    };
    let probe = p.clone();
    let reachable = tokio::task::spawn_blocking(move || probe.backend().reachable())
        .await
        .unwrap_or(false);
    Json(json!({
        "status": "ok",
        "nodes": p.graph().node_count(),
        "edges": p.graph().edge_count(),
        "backend": p.backend().name(),
        "backend_reachable": reachable,
    }))
    .into_response()
}
