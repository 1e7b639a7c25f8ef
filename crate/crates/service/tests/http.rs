use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use hhl_core::backend::SolverConfig;
use hhl_core::corpus;
use hhl_service::{app, AppState};

async fn call(method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let router = app(AppState::new(SolverConfig::default(), 4));
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b.to_string())
        }
        None => Body::empty(),
    };
    let resp = router.oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

fn src(name: &str) -> &'static str {
    corpus::get(name).unwrap()
}

#[tokio::test]
async fn parse_endpoint() {
    let (s, v) = call("POST", "/parse", Some(json!({ "source": src("ex1") }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["ok"], true);

    let (s, v) = call("POST", "/parse", Some(json!({ "source": "pre [x >= 0];\nx := ;\npost [true];" }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["ok"], false);
    assert_eq!(v["errors"].as_array().unwrap().len(), 1);
    assert!(v["errors"][0]["span"].is_array());

    let (_, v) = call("POST", "/parse", Some(json!({ "source": "" }))).await;
    assert_eq!(v["errors"][0]["message"], "expected pre block");
}

#[tokio::test]
async fn vcs_endpoint() {
    let (s, v) = call("POST", "/vcs", Some(json!({ "source": src("ex2") }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["schema"], 1);
    let mut labels: Vec<&str> = v["vcs"].as_array().unwrap().iter().map(|r| r["label"].as_str().unwrap()).collect();
    labels.sort();
    assert_eq!(labels, ["exec", "init", "maintain", "skip"]);
    assert!(v["vcs"].as_array().unwrap().iter().all(|r| !r["spans"].as_array().unwrap().is_empty()));

    let (_, v) = call("POST", "/vcs", Some(json!({ "source": src("ex3") }))).await;
    assert!(v["vcs"].as_array().unwrap().iter().any(|r| r["label"] == "init_all"));

    let (s, v) = call("POST", "/vcs", Some(json!({ "source": "pre [true]; { x := 1; }*; post [true];" }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["errors"][0]["kind"], "UnannotatedLoop");
}

#[tokio::test]
async fn vcs_is_deterministic() {
    let body = json!({ "source": src("sawtooth") });
    let (_, a) = call("POST", "/vcs", Some(body.clone())).await;
    let (_, b) = call("POST", "/vcs", Some(body)).await;
    assert_eq!(a, b);
    assert_eq!(a, serde_json::to_value(hhl_core::report::vcs_report(src("sawtooth"))).unwrap());
}

#[tokio::test]
async fn verify_endpoint() {
    let (s, v) = call("POST", "/verify", Some(json!({ "source": src("ex1") }))).await;
    assert_eq!(s, StatusCode::OK);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 4);
    assert!(results.iter().all(|r| r["result"] == "proved"), "{v}");
    assert!(results.iter().all(|r| r["time_ms"].is_u64()));

    let id = results[1]["id"].clone();
    let (_, v) = call("POST", "/verify", Some(json!({ "source": src("ex1"), "vc_ids": [id] }))).await;
    assert_eq!(v["results"].as_array().unwrap().len(), 1);

    let (s, v) = call("POST", "/verify", Some(json!({ "source": src("ex1"), "vc_ids": ["ffffffffffffffff"] }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["results"][0]["result"], "error");
    assert_eq!(v["results"][0]["message"], "unknown VC id");
}

#[tokio::test]
async fn verify_surfaces_counterexamples() {
    let (_, v) = call("POST", "/verify", Some(json!({ "source": src("ex1_broken") }))).await;
    let bad: Vec<&Value> = v["results"].as_array().unwrap().iter().filter(|r| r["result"] == "unproved").collect();
    assert_eq!(bad.len(), 1);
    assert!(bad[0]["model"]["x"].is_string());
}

async fn vc_id(source: &str, label: &str) -> String {
    let (_, v) = call("POST", "/vcs", Some(json!({ "source": source }))).await;
    v["vcs"].as_array().unwrap().iter().find(|r| r["label"] == label).unwrap()["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn set_solver_endpoint() {
    let ex1 = src("ex1");
    let id = vc_id(ex1, "init").await;
    let (s, v) = call("POST", "/set_solver", Some(json!({ "source": ex1, "vc_id": id, "solver": "wolfram" }))).await;
    assert_eq!(s, StatusCode::OK);
    let out = v["source"].as_str().unwrap().to_string();
    assert!(out.contains("{{init: wolfram}}"), "{out}");

    // rebinding to the same solver leaves the text unchanged
    let (_, again) = call("POST", "/set_solver", Some(json!({ "source": out, "vc_id": id, "solver": "wolfram" }))).await;
    assert_eq!(again["source"].as_str().unwrap(), out);

    let (_, listing) = call("POST", "/vcs", Some(json!({ "source": out }))).await;
    let init = listing["vcs"].as_array().unwrap().iter().find(|r| r["label"] == "init").unwrap();
    assert_eq!(init["solver"], "wolfram");
    assert_eq!(init["id"].as_str().unwrap(), id);

    let eps = vc_id(ex1, "").await;
    let (_, v) = call("POST", "/set_solver", Some(json!({ "source": ex1, "vc_id": eps, "solver": "z3" }))).await;
    assert!(v["source"].as_str().unwrap().contains("{{_: z3}}"));

    let ex3 = src("ex3");
    let all = vc_id(ex3, "init_all").await;
    let (s, v) = call("POST", "/set_solver", Some(json!({ "source": ex3, "vc_id": all, "solver": "wolfram" }))).await;
    assert_eq!(s, StatusCode::OK);
    let (_, listing) = call("POST", "/vcs", Some(json!({ "source": v["source"] }))).await;
    let rec = listing["vcs"].as_array().unwrap().iter().find(|r| r["label"] == "init_all").unwrap();
    assert_eq!(rec["solver"], "wolfram");
}

#[tokio::test]
async fn set_solver_errors() {
    let (s, _) =
        call("POST", "/set_solver", Some(json!({ "source": src("ex1"), "vc_id": "0000000000000000", "solver": "z3" })))
            .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call("POST", "/set_solver", Some(json!({ "source": "pre [", "vc_id": "0", "solver": "z3" }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let id = vc_id(src("ex1"), "init").await;
    let (s, _) = call("POST", "/set_solver", Some(json!({ "source": src("ex1"), "vc_id": id, "solver": "cvc5" }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn examples_endpoint() {
    let (s, v) = call("GET", "/examples", None).await;
    assert_eq!(s, StatusCode::OK);
    let names: Vec<&str> = v["examples"].as_array().unwrap().iter().map(|n| n.as_str().unwrap()).collect();
    assert!(names.contains(&"ex1") && names.contains(&"sawtooth"));
    let (s, v) = call("GET", "/examples/ex2", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["source"].as_str().unwrap(), src("ex2"));
    let (s, _) = call("GET", "/examples/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cors_allows_localhost_only() {
    let router = app(AppState::new(SolverConfig::default(), 1));
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/vcs")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "http://localhost:5173");
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/vcs")
        .header("origin", "http://example.com")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = router.oneshot(req).await.unwrap();
    assert!(resp.headers().get("access-control-allow-origin").is_none());
}
