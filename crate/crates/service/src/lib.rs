//! Stateless HTTP interface over parsing, VC generation and checking. Every
//! request carries the full program source.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, CorsLayer};

use hhl_core::backend::{self, SolverConfig};
use hhl_core::corpus;
use hhl_core::labels::SolverName;
use hhl_core::parser::{self, RewriteError};
use hhl_core::report::{self, ErrorRecord, ResultRecord, VcsReport, SCHEMA};

pub const DEFAULT_PORT: u16 = 8899;

#[derive(Clone)]
pub struct AppState {
    cfg: Arc<SolverConfig>,
    /// Bounds the number of solver processes across all requests.
    solvers: Arc<Semaphore>,
}

impl AppState {
    pub fn new(cfg: SolverConfig, jobs: usize) -> AppState {
        AppState { cfg: Arc::new(cfg), solvers: Arc::new(Semaphore::new(jobs.max(1))) }
    }
}

pub fn app(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|origin: &HeaderValue, _| is_local_origin(origin)))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/parse", post(parse))
        .route("/vcs", post(vcs))
        .route("/verify", post(verify))
        .route("/set_solver", post(set_solver))
        .route("/examples", get(examples))
        .route("/examples/{name}", get(example))
        .layer(cors)
        .with_state(state)
}

fn is_local_origin(origin: &HeaderValue) -> bool {
    let Ok(s) = origin.to_str() else { return false };
    let Some(rest) = s.strip_prefix("http://").or_else(|| s.strip_prefix("https://")) else { return false };
    let host = match rest.rsplit_once(':') {
        Some((h, port)) if port.chars().all(|c| c.is_ascii_digit()) => h,
        _ => rest,
    };
    matches!(host, "localhost" | "127.0.0.1" | "[::1]")
}

#[derive(Deserialize)]
pub struct SourceRequest {
    pub source: String,
}

#[derive(Serialize)]
struct ParseResponse {
    schema: u32,
    ok: bool,
    errors: Vec<ErrorRecord>,
}

async fn parse(Json(req): Json<SourceRequest>) -> Json<ParseResponse> {
    let errors = match parser::parse(&req.source) {
        Ok(_) => Vec::new(),
        Err(e) => vec![ErrorRecord::parse(&e, &req.source)],
    };
    Json(ParseResponse { schema: SCHEMA, ok: errors.is_empty(), errors })
}

async fn vcs(Json(req): Json<SourceRequest>) -> Json<VcsReport> {
    Json(report::vcs_report(&req.source))
}

#[derive(Deserialize)]
pub struct VerifyRequest {
    pub source: String,
    #[serde(default)]
    pub vc_ids: Option<Vec<String>>,
}

#[derive(Serialize)]
struct VerifyItem {
    id: String,
    result: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<std::collections::BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

impl VerifyItem {
    fn from_record(id: String, r: ResultRecord) -> VerifyItem {
        VerifyItem { id, result: r.status, time_ms: r.time_ms, model: r.model, message: r.message }
    }
}

#[derive(Serialize)]
struct VerifyResponse {
    schema: u32,
    results: Vec<VerifyItem>,
    errors: Vec<ErrorRecord>,
}

async fn verify(State(state): State<AppState>, Json(req): Json<VerifyRequest>) -> Json<VerifyResponse> {
    let prepared = match report::prepare(&req.source) {
        Ok(p) => p,
        Err(e) => return Json(VerifyResponse { schema: SCHEMA, results: Vec::new(), errors: vec![e] }),
    };
    let wanted: Vec<String> = match req.vc_ids {
        Some(ids) => ids,
        None => prepared.vcs.iter().map(|vc| vc.id.clone()).collect(),
    };
    let mut pending = Vec::new();
    for id in wanted {
        let Some(vc) = prepared.vcs.iter().find(|vc| vc.id == id).cloned() else {
            pending.push((id, None));
            continue;
        };
        let state = state.clone();
        let handle = tokio::spawn(async move {
            let _permit = state.solvers.acquire_owned().await.expect("semaphore is never closed");
            tokio::task::spawn_blocking(move || {
                let start = std::time::Instant::now();
                let r = backend::check(&vc, &state.cfg);
                (r, start.elapsed())
            })
            .await
        });
        pending.push((id, Some(handle)));
    }
    let mut results = Vec::new();
    for (id, handle) in pending {
        let item = match handle {
            None => VerifyItem { id, result: "error", time_ms: None, model: None, message: Some("unknown VC id".into()) },
            Some(h) => match h.await {
                Ok(Ok((r, t))) => VerifyItem::from_record(id, ResultRecord::new(&r, Some(t.as_millis() as u64))),
                _ => VerifyItem { id, result: "error", time_ms: None, model: None, message: Some("check failed".into()) },
            },
        };
        results.push(item);
    }
    Json(VerifyResponse { schema: SCHEMA, results, errors: Vec::new() })
}

#[derive(Deserialize)]
pub struct SetSolverRequest {
    pub source: String,
    pub vc_id: String,
    pub solver: SolverName,
}

#[derive(Serialize)]
struct SourceResponse {
    schema: u32,
    source: String,
}

#[derive(Serialize)]
struct ErrorResponse {
    schema: u32,
    errors: Vec<ErrorRecord>,
}

fn error_response(status: StatusCode, e: ErrorRecord) -> Response {
    (status, Json(ErrorResponse { schema: SCHEMA, errors: vec![e] })).into_response()
}

async fn set_solver(Json(req): Json<SetSolverRequest>) -> Response {
    let prepared = match report::prepare(&req.source) {
        Ok(p) => p,
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    let Some(vc) = prepared.vcs.iter().find(|vc| vc.id == req.vc_id) else {
        return error_response(
            StatusCode::NOT_FOUND,
            ErrorRecord::other("UnknownVc", format!("no VC with id {}", req.vc_id)),
        );
    };
    match parser::rewrite_hint(&req.source, &vc.origin.path, &vc.label, req.solver) {
        Ok(source) => Json(SourceResponse { schema: SCHEMA, source }).into_response(),
        Err(RewriteError::Parse(e)) => error_response(StatusCode::UNPROCESSABLE_ENTITY, ErrorRecord::parse(&e, &req.source)),
        Err(e @ RewriteError::UnknownAssertion(_)) => {
            error_response(StatusCode::UNPROCESSABLE_ENTITY, ErrorRecord::other("UnknownAssertion", e.to_string()))
        }
    }
}

#[derive(Serialize)]
struct ExampleList {
    schema: u32,
    examples: Vec<&'static str>,
}

async fn examples() -> Json<ExampleList> {
    Json(ExampleList { schema: SCHEMA, examples: corpus::CORPUS.iter().map(|(n, _)| *n).collect() })
}

#[derive(Serialize)]
struct Example {
    schema: u32,
    name: String,
    source: &'static str,
}

async fn example(Path(name): Path<String>) -> Response {
    match corpus::get(&name) {
        Some(source) => Json(Example { schema: SCHEMA, name, source }).into_response(),
        None => error_response(StatusCode::NOT_FOUND, ErrorRecord::other("UnknownExample", format!("no example `{name}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_origins() {
        for ok in ["http://localhost:5173", "http://127.0.0.1", "https://localhost", "http://[::1]:3000"] {
            assert!(is_local_origin(&HeaderValue::from_static(ok)), "{ok}");
        }
        for bad in ["http://example.com", "http://localhost.evil.com", "file://localhost", "null"] {
            assert!(!is_local_origin(&HeaderValue::from_static(bad)), "{bad}");
        }
    }
}
