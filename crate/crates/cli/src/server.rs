//! HTTP surface: `POST /classify`, `POST /reply`, `GET /health`.

use std::net::SocketAddr;
use std::sync::{Arc, OnceLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;
use triage_core::app::{EmailText, TriageEngine};
use triage_core::TriageError;

pub const DEFAULT_BODY_LIMIT: usize = 64 * 1024;

/// Shared by all handlers. The engine slot is filled once, after the
/// model has loaded; until then every endpoint reports 503.
#[derive(Clone, Default)]
pub struct AppState {
    engine: Arc<OnceLock<TriageEngine>>,
}

impl AppState {
    pub fn loaded(engine: TriageEngine) -> Self {
        let state = AppState::default();
        state.install(engine);
        state
    }

    /// Returns false if an engine was already installed.
    pub fn install(&self, engine: TriageEngine) -> bool {
        self.engine.set(engine).is_ok()
    }

    fn engine(&self) -> Result<&TriageEngine, ApiError> {
        self.engine.get().ok_or(ApiError {
            status: StatusCode::SERVICE_UNAVAILABLE,
            message: "model is still loading".into(),
        })
    }
}

struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<TriageError> for ApiError {
    fn from(e: TriageError) -> Self {
        let status = match e {
            TriageError::EmptyText { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

fn parse_request(body: &[u8]) -> Result<EmailText, ApiError> {
    let value: serde_json::Value =
        serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))?;
    if !value.is_object() {
        return Err(ApiError::bad_request("request body must be a JSON object"));
    }
    serde_json::from_value(value).map_err(|e| ApiError::bad_request(format!("invalid request: {e}")))
}

async fn classify(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let engine = state.engine()?;
    let email = parse_request(&body)?;
    Ok(Json(engine.classify_email(&email)?).into_response())
}

#[derive(Serialize)]
struct ReplyResponse {
    rendered: String,
    tailored: bool,
    category: Option<String>,
    confidence: f64,
}

async fn reply(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let engine = state.engine()?;
    let email = parse_request(&body)?;
    let d = engine.reply_email(&email)?;
    Ok(Json(ReplyResponse {
        rendered: d.rendered,
        tailored: d.tailored,
        category: d.category,
        confidence: d.confidence,
    })
    .into_response())
}

async fn health(State(state): State<AppState>) -> Response {
    match state.engine.get() {
        Some(engine) => Json(json!({ "status": "ok", "model_version": engine.model_version() })).into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "status": "loading", "model_version": null })),
        )
            .into_response(),
    }
}

pub fn router(state: AppState, body_limit: usize) -> Router {
    Router::new()
        .route("/classify", post(classify))
        .route("/reply", post(reply))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

/// Binds first, then loads the engine in the background so `/health`
/// answers 503 while loading.
pub async fn serve<F>(addr: SocketAddr, body_limit: usize, load: F) -> std::io::Result<()>
where
    F: FnOnce() -> Result<TriageEngine, TriageError> + Send + 'static,
{
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    let state = AppState::default();
    let slot = state.clone();
    tokio::task::spawn_blocking(move || match load() {
        Ok(engine) => {
            eprintln!("model loaded: {}", engine.model_version());
            slot.install(engine);
        }
        Err(e) => {
            eprintln!("error: failed to load model: {e}");
            std::process::exit(1);
        }
    });
    axum::serve(listener, router(state, body_limit))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
