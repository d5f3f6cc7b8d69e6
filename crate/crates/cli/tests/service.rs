use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use edgecert_cli::service::{router, AppState, SCHEMA_VERSION};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap();
    let v = serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, v)
}

async fn create(app: &Router, fixture: &str) -> String {
    let (s, v) = call(app, "POST", "/v1/sessions", Some(json!({ "dataset": { "fixture": fixture } }))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["schema_version"], SCHEMA_VERSION);
    v["session"]["id"].as_str().unwrap().to_string()
}

fn app(dir: Option<std::path::PathBuf>) -> Router {
    router(Arc::new(AppState::open(dir)))
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_session_is_404() {
    let app = app(None);
    for uri in ["/v1/sessions/nope", "/v1/sessions/nope/question", "/v1/sessions/nope/metrics"] {
        let (s, v) = call(&app, "GET", uri, None).await;
        assert_eq!(s, StatusCode::NOT_FOUND);
        assert_eq!(v["error"]["code"], "not_found");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn bad_dataset_is_rejected() {
    let app = app(None);
    let body = json!({ "dataset": { "csv": "a,b\n1,x\n" } });
    let (s, v) = call(&app, "POST", "/v1/sessions", Some(body)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "malformed_data");
    let body = json!({ "dataset": { "fixture": "asia_golden" }, "config": { "permutations": 1 } });
    let (s, v) = call(&app, "POST", "/v1/sessions", Some(body)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid_config");
}

#[tokio::test(flavor = "multi_thread")]
async fn golden_session_runs_to_done() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(Some(dir.path().to_path_buf()));
    let id = create(&app, "asia_golden").await;
    let base = format!("/v1/sessions/{id}");

    let (_, q) = call(&app, "GET", &format!("{base}/question"), None).await;
    assert_eq!(q["status"], "AWAITING_ANSWER");
    assert_eq!(q["question"]["kind"], "PER_EDGE");
    assert_eq!(q["question"]["edge"], json!(["smoke", "lung"]));
    assert!(q["question"]["question_text"].as_str().unwrap().contains("smoke"));
    assert_eq!(q["dag"]["committed"].as_array().unwrap().len(), 3);

    // wrong id, then wrong kind; neither changes state
    let (s, v) = call(&app, "POST", &format!("{base}/answer"), Some(json!({"query_id": 7, "answer": "FWD"}))).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
    let (s, _) = call(&app, "POST", &format!("{base}/answer"), Some(json!({"query_id": 1, "answer": "CHILDREN 2"}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = call(&app, "POST", &format!("{base}/answer"), Some(json!({"query_id": 1, "answer": "SIDEWAYS"}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    let mut last = Value::Null;
    for id in 1..=3 {
        let (s, v) = call(&app, "POST", &format!("{base}/answer"), Some(json!({"query_id": id, "answer": "FWD"}))).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        assert!(v["propagation"]["resolutions"].is_u64());
        last = v;
    }
    assert_eq!(last["status"], "DONE");
    assert!(last["question"].is_null());

    let (_, m) = call(&app, "GET", &format!("{base}/metrics"), None).await;
    assert_eq!(m["status"], "DONE");
    assert_eq!(m["metrics"]["queries"], 3);
    assert_eq!(m["metrics"]["committed"], 6);
    assert_eq!(m["metrics"]["precision"], 1.0);
    assert_eq!(m["metrics"]["recall"], 0.75);
    assert_eq!(m["metrics"]["guarantee_violations"], 0);

    let (_, t) = call(&app, "GET", &format!("{base}/trace"), None).await;
    let events = t["events"].as_array().unwrap();
    assert_eq!(events.iter().filter(|e| e["action"] == "ANSWER").count(), 3);
    let (s, csv) = call(&app, "GET", &format!("{base}/trace?format=csv"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(csv.as_str().unwrap().starts_with("round,mechanism"));

    // a fresh server over the same state dir sees the finished session
    let again = app_reopened(dir.path());
    let (_, m2) = call(&again, "GET", &format!("{base}/metrics"), None).await;
    assert_eq!(m2["metrics"], m["metrics"]);
}

fn app_reopened(p: &std::path::Path) -> Router {
    app(Some(p.to_path_buf()))
}

#[tokio::test(flavor = "multi_thread")]
async fn sessions_are_isolated_and_resume_mid_run() {
    let dir = tempfile::tempdir().unwrap();
    let app1 = app(Some(dir.path().to_path_buf()));
    let a = create(&app1, "asia_golden").await;
    let b = create(&app1, "asia_golden").await;
    assert_ne!(a, b);
    let (s, _) = call(&app1, "POST", &format!("/v1/sessions/{a}/answer"), Some(json!({"query_id": 1, "answer": "FWD"}))).await;
    assert_eq!(s, StatusCode::OK);

    let (_, qa) = call(&app1, "GET", &format!("/v1/sessions/{a}/question"), None).await;
    let (_, qb) = call(&app1, "GET", &format!("/v1/sessions/{b}/question"), None).await;
    assert_eq!(qa["question"]["id"], 2);
    assert_eq!(qb["question"]["id"], 1);

    let (_, list) = call(&app1, "GET", "/v1/sessions", None).await;
    assert_eq!(list["sessions"].as_array().unwrap().len(), 2);

    let app2 = app_reopened(dir.path());
    let (_, qa2) = call(&app2, "GET", &format!("/v1/sessions/{a}/question"), None).await;
    assert_eq!(qa2["question"], qa["question"]);
    let (_, qb2) = call(&app2, "GET", &format!("/v1/sessions/{b}/question"), None).await;
    assert_eq!(qb2["question"], qb["question"]);
}
