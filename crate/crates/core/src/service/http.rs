use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::watch;
use tower_http::services::ServeDir;

use crate::dialogue::Prosody;
use crate::ingest::{run_scheduler, SystemClock};

use super::{Agent, ServiceError};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::SessionNotFound(_) | ServiceError::UnknownSource(_) => StatusCode::NOT_FOUND,
            ServiceError::UnsupportedLanguage(_) | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::StoreUnavailable => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Ingest(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.kind(), "message": self.to_string() }))).into_response()
    }
}

fn json_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ServiceError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

#[derive(Debug, Default, Deserialize)]
struct CreateSession {
    language: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct Utterance {
    text: String,
}

#[derive(Debug, Default, Deserialize)]
struct IngestRequest {
    source_id: Option<String>,
}

type Shared = State<Arc<Agent>>;

async fn create_session(State(agent): Shared, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: CreateSession = json_body(&body)?;
    let (session_id, response) = agent.create_session(req.language.as_deref())?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": session_id, "response": response }))))
}

async fn utterance(State(agent): Shared, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: Utterance = json_body(&body)?;
    Ok(Json(agent.handle_utterance(&id, &req.text).await?))
}

async fn session(State(agent): Shared, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(agent.session_summary(&id).await?))
}

async fn transcript(State(agent): Shared, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(agent.transcript(&id).await?))
}

async fn prosody(State(agent): Shared, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let p: Prosody = json_body(&body)?;
    Ok(Json(agent.set_prosody(&id, p).await?))
}

/// With a `source_id` the single report is returned, otherwise a list with
/// one report per configured source.
async fn admin_ingest(State(agent): Shared, body: Bytes) -> Result<Response, ServiceError> {
    let req: IngestRequest = json_body(&body)?;
    match req.source_id {
        Some(id) => Ok(Json(agent.trigger_ingest(&id).await?).into_response()),
        None => {
            let mut reports = Vec::new();
            for source in &agent.sources {
                reports.push(agent.ingest_source(source).await?);
            }
            Ok(Json(reports).into_response())
        }
    }
}

async fn stats(State(agent): Shared) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(agent.graph.read()?.stats()))
}

async fn healthz() -> &'static str {
    "ok"
}

pub fn router(agent: Arc<Agent>, static_dir: Option<PathBuf>) -> Router {
    let mut app = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session))
        .route("/sessions/{id}/utterance", post(utterance))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/prosody", post(prosody))
        .route("/admin/ingest", post(admin_ingest))
        .route("/graph/stats", get(stats))
        .route("/healthz", get(healthz));
    if let Some(dir) = static_dir {
        app = app.nest_service("/app", ServeDir::new(dir).append_index_html_on_directories(true));
    }
    app.with_state(agent)
}

/// Serves until ctrl-c, running the feed scheduler alongside; flushes the
/// snapshot on the way out.
pub async fn serve(agent: Arc<Agent>, listen: &str, static_dir: Option<PathBuf>, schedule: bool) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .map_err(|e| ServiceError::Config(format!("bind {listen}: {e}")))?;
    tracing::info!(addr = %listen, "listening");
    let (stop_tx, stop_rx) = watch::channel(false);

    let scheduler = (schedule && !agent.sources.is_empty()).then(|| {
        let agent = agent.clone();
        let rx = stop_rx.clone();
        tokio::spawn(async move {
            let clock = SystemClock::new(rx);
            let job_agent = agent.clone();
            run_scheduler(&agent.sources, &clock, move |source, _| {
                let agent = job_agent.clone();
                let source = source.clone();
                async move {
                    agent.ingest_source(&source).await.map_err(|e| match e {
                        ServiceError::Ingest(e) => e,
                        other => crate::ingest::IngestError::MalformedFeed(other.to_string()),
                    })
                }
            })
            .await;
        })
    });

    let sweeper = {
        let agent = agent.clone();
        let mut rx = stop_rx.clone();
        tokio::spawn(async move {
            loop {
                tokio::select! {
                    _ = tokio::time::sleep(std::time::Duration::from_secs(60)) => {
                        agent.sessions().expire(chrono::Utc::now());
                    }
                    _ = rx.changed() => break,
                }
            }
        })
    };

    let app = router(agent.clone(), static_dir);
    axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
            let _ = stop_tx.send(true);
        })
        .await
        .map_err(|e| ServiceError::Config(e.to_string()))?;

    if let Some(handle) = scheduler {
        let _ = handle.await;
    }
    let _ = sweeper.await;
    if let Some(path) = &agent.settings.snapshot {
        agent.save_snapshot(path)?;
        tracing::info!(path = %path.display(), "snapshot flushed");
    }
    Ok(())
}
