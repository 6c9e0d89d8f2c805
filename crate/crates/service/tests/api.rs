use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use concord_service::{router, AppState, CorpusStore};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn app() -> Router {
    router(Arc::new(AppState::new(CorpusStore::new(Some(fixtures())))))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &Router) -> String {
    let (st, v) = call(app, "POST", "/sessions", Some(json!({"corpus_ref": "articles.jsonl", "config": {"k": 6, "w": 10.0, "rng_seed": 3}}))).await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

async fn add(app: &Router, id: &str, kind: &str, a: &str, b: &str) -> (StatusCode, Value) {
    call(app, "POST", &format!("/sessions/{id}/constraints"), Some(json!({"kind": kind, "a": a, "b": b}))).await
}

#[tokio::test]
async fn fresh_session_and_history() {
    let app = app();
    let id = create(&app).await;
    let (st, state) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(state["history"].as_array().unwrap().len(), 1);
    assert!(state["constraints"].as_array().unwrap().is_empty());
    let docs = state["documents"].as_array().unwrap();
    assert_eq!(docs.len(), 25);
    assert!(docs.iter().all(|d| d["snippet"].as_str().unwrap().chars().count() <= 400));
    let initial = state["history"][0]["assignment"].clone();

    let (_, r) = call(&app, "POST", &format!("/sessions/{id}/recluster"), None).await;
    assert_eq!(r["run"]["assignment"], initial);
    assert_eq!(r["run"]["run_index"], 1);
    let (_, r2) = call(&app, "POST", &format!("/sessions/{id}/recluster"), None).await;
    assert_eq!(r2["run"]["manifest"], r["run"]["manifest"]);
    assert_eq!(r2["run"]["run_index"], 2);
    call(&app, "POST", &format!("/sessions/{id}/recluster"), None).await;
    let (_, m) = call(&app, "GET", &format!("/sessions/{id}/metrics"), None).await;
    assert_eq!(m["history"].as_array().unwrap().len(), 4);
    assert_eq!(m["latest"], m["history"][3]["metrics"]);
}

#[tokio::test]
async fn constraint_errors_are_machine_readable() {
    let app = app();
    let id = create(&app).await;
    assert_eq!(add(&app, &id, "ML", "a01", "a04").await.0, StatusCode::OK);
    assert_eq!(add(&app, &id, "must", "a04", "a08").await.0, StatusCode::OK);
    let (st, e) = add(&app, &id, "CL", "a01", "a08").await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(e["error"]["code"], "inconsistent_constraints");
    assert_eq!(e["error"]["chain"], json!(["a01", "a04", "a08"]));
    assert!(e["error"]["message"].as_str().unwrap().contains("a04"));

    let (st, e) = add(&app, &id, "CL", "a04", "a01").await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(e["error"]["code"], "duplicate_pair");
    let (st, e) = add(&app, &id, "ML", "a01", "zzz").await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(e["error"]["code"], "unknown_document");
    let (st, e) = add(&app, &id, "maybe", "a01", "a02").await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(e["error"]["code"], "bad_request");
    let (st, e) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(e["error"]["code"], "unknown_session");
    let (st, e) = call(&app, "POST", "/sessions", Some(json!({"corpus_ref": "../secret.jsonl"}))).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(e["error"]["code"], "corpus_not_found");
    let (st, _) = call(&app, "POST", "/sessions", Some(json!({"corpus": 1}))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, e) = call(&app, "DELETE", &format!("/sessions/{id}/constraints/9"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(e["error"]["code"], "unknown_constraint");
}

#[tokio::test]
async fn preview_matches_batch_evaluation() {
    use concord::constraints::{Constraint, ConstraintKind, ConstraintSet};
    use concord::corpus::{build_vocabulary, vectorize, Corpus, Stopwords};
    use concord::evaluation::{coherence, informativeness};

    let app = app();
    let id = create(&app).await;
    let (_, p1) = add(&app, &id, "ML", "a03", "a10").await;
    let (_, p2) = add(&app, &id, "CL", "a05", "a13").await;
    let (_, state) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    let reference: Vec<usize> = serde_json::from_value(state["reference"].clone()).unwrap();

    let text = std::fs::read_to_string(fixtures().join("articles.jsonl")).unwrap();
    let corpus = Corpus::read_jsonl(text.as_bytes(), "articles", &Stopwords::embedded(), 0).unwrap().corpus;
    let m = vectorize(&corpus, &build_vocabulary(&corpus).unwrap()).unwrap();
    let ix = |d: &str| corpus.index_of(d).unwrap();
    let mut set = ConstraintSet::new();
    set.insert(Constraint::new(ConstraintKind::MustLink, ix("a03"), ix("a10")).unwrap());
    assert_eq!(p1["informativeness"].as_f64().unwrap(), informativeness(&set, &reference).unwrap());
    assert_eq!(p1["coherence"].as_f64().unwrap(), coherence(&set, &m).unwrap());
    set.insert(Constraint::new(ConstraintKind::CannotLink, ix("a05"), ix("a13")).unwrap());
    assert_eq!(p2["informativeness"].as_f64().unwrap(), informativeness(&set, &reference).unwrap());
    assert_eq!(p2["coherence"].as_f64().unwrap(), coherence(&set, &m).unwrap());
    assert_eq!(p2["n_constraints"], 2);
}

#[tokio::test]
async fn unstage_then_remove() {
    let app = app();
    let id = create(&app).await;
    add(&app, &id, "ML", "a03", "a10").await;
    let (st, d) = call(&app, "DELETE", &format!("/sessions/{id}/constraints/0"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(d["action"], "unstage");
    add(&app, &id, "ML", "a03", "a10").await;
    call(&app, "POST", &format!("/sessions/{id}/recluster"), None).await;
    let (_, d) = call(&app, "DELETE", &format!("/sessions/{id}/constraints/0"), None).await;
    assert_eq!(d["action"], "remove");
    let (_, log) = call(&app, "GET", &format!("/sessions/{id}/export"), None).await;
    let kinds: Vec<&str> = log["actions"].as_array().unwrap().iter().map(|a| a["action"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["create", "add_constraint", "unstage", "add_constraint", "recluster", "remove"]);
}

#[tokio::test]
async fn export_import_round_trip() {
    let app = app();
    let id = create(&app).await;
    add(&app, &id, "ML", "a05", "a15").await;
    call(&app, "POST", &format!("/sessions/{id}/recluster"), None).await;
    add(&app, &id, "CL", "a07", "a19").await;
    let (_, log) = call(&app, "GET", &format!("/sessions/{id}/export"), None).await;
    let (st, imported) = call(&app, "POST", "/sessions/import", Some(log)).await;
    assert_eq!(st, StatusCode::CREATED);
    let new_id = imported["session_id"].as_str().unwrap().to_string();
    assert_ne!(new_id, id);
    let (_, a) = call(&app, "POST", &format!("/sessions/{id}/recluster"), None).await;
    let (_, b) = call(&app, "POST", &format!("/sessions/{new_id}/recluster"), None).await;
    assert_eq!(a["run"], b["run"]);
    let (st, _) = call(&app, "POST", "/sessions/import", Some(json!({"session_id": "x", "actions": []}))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn concurrent_sessions_are_isolated() {
    let app = app();
    let a = create(&app).await;
    let b = create(&app).await;
    let solo = create(&app).await;
    let steps = |id: String, kind: &'static str| {
        let app = app.clone();
        async move {
            add(&app, &id, kind, "a01", "a02").await;
            call(&app, "POST", &format!("/sessions/{id}/recluster"), None).await.1
        }
    };
    let (ra, _rb) = tokio::join!(steps(a.clone(), "ML"), steps(b.clone(), "CL"));
    let rs = steps(solo, "ML").await;
    assert_eq!(ra["run"], rs["run"]);
    let (_, sb) = call(&app, "GET", &format!("/sessions/{b}"), None).await;
    assert_eq!(sb["constraints"][0]["kind"], "CL");
}

#[tokio::test]
async fn logs_persist_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let state = || AppState::new(CorpusStore::new(Some(fixtures()))).with_log_dir(dir.path()).unwrap();
    let app = router(Arc::new(state()));
    let id = create(&app).await;
    add(&app, &id, "ML", "a03", "a10").await;
    call(&app, "POST", &format!("/sessions/{id}/recluster"), None).await;
    add(&app, &id, "CL", "a03", "a05").await;
    add(&app, &id, "CL", "a03", "a10").await;
    let (_, before) = call(&app, "GET", &format!("/sessions/{id}"), None).await;

    let app = router(Arc::new(state()));
    let (st, after) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(before, after);
    let next = create(&app).await;
    assert_ne!(next, id);
}

#[tokio::test]
async fn synthetic_corpora_are_available() {
    let app = app();
    let (st, v) = call(&app, "POST", "/sessions", Some(json!({"corpus_ref": "synthetic:table-iii:5"}))).await;
    assert_eq!(st, StatusCode::CREATED);
    assert_eq!(v["labelings"], json!(["truth"]));
    let (_, ids) = call(&app, "GET", "/sessions", None).await;
    assert_eq!(ids.as_array().unwrap().len(), 1);
}
