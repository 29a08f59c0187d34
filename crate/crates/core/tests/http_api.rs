mod common;

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::Utc;
use newsagent::graph::{GraphStore, SharedGraph};
use newsagent::ingest::FeedSource;
use newsagent::service::{router, Agent, AgentSettings};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

async fn desk_app() -> (Arc<Agent>, Router) {
    let agent = Arc::new(common::desk_agent().await);
    (agent.clone(), router(agent, None))
}

#[tokio::test]
async fn create_session_greets_in_requested_language() {
    let (agent, app) = desk_app().await;
    let (status, body) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = body["session_id"].as_str().unwrap();
    let en = agent.responses.get("en").unwrap().fill("greeting", &Default::default()).unwrap();
    assert_eq!(body["response"]["text"], en);

    let (status, body) = call(&app, "POST", "/sessions", Some(json!({"language": "de"}))).await;
    assert_eq!(status, StatusCode::CREATED);
    let de = agent.responses.get("de").unwrap().fill("greeting", &Default::default()).unwrap();
    assert_eq!(body["response"]["text"], de);

    let (status, body) = call(&app, "POST", "/sessions", Some(json!({"language": "xx"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "UnsupportedLanguage");

    let (status, summary) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["state"], "Idle");
}

#[tokio::test]
async fn utterances_drive_the_session() {
    let (_, app) = desk_app().await;
    let (_, body) = call(&app, "POST", "/sessions", None).await;
    let id = body["session_id"].as_str().unwrap().to_string();
    let uri = format!("/sessions/{id}/utterance");

    let (status, r) = call(&app, "POST", &uri, Some(json!({"text": "Play the news."}))).await;
    assert_eq!(status, StatusCode::OK);
    let keys: Vec<&str> = r["suggestions"].as_array().unwrap().iter().map(|s| s["key"].as_str().unwrap()).collect();
    assert_eq!(keys, ["desk:p1", "desk:e1", "desk:s1"]);
    assert_eq!(r["debug"]["intent"], "overview");
    assert_eq!(r["debug"]["session_state"], "Browsing");
    roxmltree::Document::parse(r["ssml"].as_str().unwrap()).unwrap();

    let (_, r) = call(&app, "POST", &uri, Some(json!({"text": "blorp fizzle wug"}))).await;
    assert_eq!(r["debug"]["intent"], "fallback");

    let (_, r) = call(&app, "POST", &uri, Some(json!({"text": "Pause."}))).await;
    assert_eq!(r["directives"], json!(["pause"]));

    let (_, t) = call(&app, "GET", &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(t.as_array().unwrap().len(), 3);
    assert_eq!(t[0]["user"], "Play the news.");

    let (status, _) = call(&app, "POST", &uri, Some(json!({"txt": 1}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn prosody_endpoint_validates_rate() {
    let (_, app) = desk_app().await;
    let (_, body) = call(&app, "POST", "/sessions", None).await;
    let id = body["session_id"].as_str().unwrap().to_string();
    let uri = format!("/sessions/{id}/prosody");
    let (status, s) = call(&app, "POST", &uri, Some(json!({"rate": 1.5, "voice": "anna"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(s["prosody"]["rate"], 1.5);
    let (status, _) = call(&app, "POST", &uri, Some(json!({"rate": 3.0}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, r) = call(&app, "POST", &format!("/sessions/{id}/utterance"), Some(json!({"text": "Help."}))).await;
    assert!(r["ssml"].as_str().unwrap().contains("rate=\"150%\""));
}

#[tokio::test]
async fn unknown_sessions_without_auto_create() {
    let gaz = common::gazetteer();
    let settings = AgentSettings { auto_create_sessions: false, ..AgentSettings::default() };
    let app = router(Arc::new(Agent::new(SharedGraph::new(GraphStore::new()), gaz, settings)), None);
    let (status, body) = call(&app, "POST", "/sessions/nope/utterance", Some(json!({"text": "Hello."}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "SessionNotFound");
    let (status, _) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn auto_created_session_answers_first_utterance() {
    let (_, app) = desk_app().await;
    let (status, r) = call(&app, "POST", "/sessions/fresh/utterance", Some(json!({"text": "Play the news."}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["suggestions"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn admin_ingest_reports_and_is_idempotent() {
    let gaz = common::gazetteer();
    let mut agent = Agent::new(SharedGraph::new(GraphStore::new()), gaz, AgentSettings::default());
    agent.sources = vec![FeedSource::file("wire", common::fixture("feed5.json").to_string_lossy())];
    let app = router(Arc::new(agent), None);

    let (status, r) = call(&app, "POST", "/admin/ingest", Some(json!({"source_id": "wire"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!((r["created"].as_u64(), r["merged"].as_u64()), (Some(5), Some(0)));

    let (_, all) = call(&app, "POST", "/admin/ingest", None).await;
    assert_eq!((all[0]["created"].as_u64(), all[0]["merged"].as_u64()), (Some(0), Some(5)));

    let (status, body) = call(&app, "POST", "/admin/ingest", Some(json!({"source_id": "nope"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownSource");

    let (status, stats) = call(&app, "GET", "/graph/stats", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats["nodes"]["Article"], 5);
}

#[tokio::test]
async fn failing_source_maps_to_bad_gateway() {
    let gaz = common::gazetteer();
    let mut agent = Agent::new(SharedGraph::new(GraphStore::new()), gaz, AgentSettings::default());
    agent.sources = vec![FeedSource::file("gone", "/definitely/not/here.json")];
    let app = router(Arc::new(agent), None);
    let (status, body) = call(&app, "POST", "/admin/ingest", Some(json!({"source_id": "gone"}))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(body["error"].is_string());
}

// The guard is held across the request on purpose.
#[allow(clippy::await_holding_lock)]
#[tokio::test]
async fn held_write_lock_gives_service_unavailable() {
    let gaz = common::gazetteer();
    let graph = SharedGraph::new(GraphStore::new()).with_timeout(Duration::from_millis(50));
    let agent = Arc::new(Agent::new(graph.clone(), gaz, AgentSettings::default()));
    let app = router(agent, None);
    let guard = graph.write().unwrap();
    let (status, body) = call(&app, "GET", "/graph/stats", None).await;
    drop(guard);
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["error"], "StoreUnavailable");
}

#[tokio::test]
async fn http_matches_direct_turns() {
    let (agent, app) = desk_app().await;
    let (mut direct, _) = agent.open_session("direct", None, Utc::now()).unwrap();
    for text in ["Play the news.", "The second.", "Read the whole article.", "More.", "Goodbye."] {
        let want = agent.turn(&mut direct, text, Utc::now()).unwrap();
        let (_, got) = call(&app, "POST", "/sessions/mirror/utterance", Some(json!({"text": text}))).await;
        assert_eq!(got, serde_json::to_value(&want).unwrap(), "{text}");
    }
}

#[tokio::test]
async fn health_and_static_app() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>agent</html>").unwrap();
    let agent = Arc::new(common::desk_agent().await);
    let app = router(agent, Some(dir.path().to_path_buf()));
    let (status, body) = call(&app, "GET", "/healthz", None).await;
    assert_eq!((status, body), (StatusCode::OK, Value::String("ok".into())));
    let (status, body) = call(&app, "GET", "/app/", None).await;
    assert_eq!((status, body), (StatusCode::OK, Value::String("<html>agent</html>".into())));
}
