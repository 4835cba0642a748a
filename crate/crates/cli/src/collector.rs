//! HTTP service that receives session logs and stores one file per session.

use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use espim_core::session::{parse_session, Violation};
use serde::Serialize;
use serde_json::json;

use crate::output::write_new_atomic;

pub const TOKEN_HEADER: &str = "x-collector-token";
pub const TOKEN_ENV: &str = "ESPIM_COLLECTOR_TOKEN";
pub const DEFAULT_MAX_BODY_BYTES: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct CollectorConfig {
    pub out_dir: PathBuf,
    /// Shared secret expected in the token header, if any.
    pub token: Option<String>,
    pub max_body_bytes: usize,
}

impl CollectorConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self { out_dir: out_dir.into(), token: None, max_body_bytes: DEFAULT_MAX_BODY_BYTES }
    }
}

#[derive(Serialize)]
struct Rejection {
    error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    violations: Vec<Violation>,
}

fn reject(status: StatusCode, error: impl Into<String>, violations: Vec<Violation>) -> Response {
    (status, Json(Rejection { error: error.into(), violations })).into_response()
}

pub fn router(config: CollectorConfig) -> Router {
    let limit = config.max_body_bytes;
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/sessions", post(upload))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(Arc::new(config))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn upload(State(config): State<Arc<CollectorConfig>>, headers: HeaderMap, body: Bytes) -> Response {
    if let Some(expected) = &config.token {
        let given = headers.get(TOKEN_HEADER).and_then(|v| v.to_str().ok());
        if given != Some(expected.as_str()) {
            return reject(StatusCode::UNAUTHORIZED, "missing or wrong collector token", Vec::new());
        }
    }
    let session = match parse_session(&body) {
        Ok(s) => s,
        Err(e) => {
            tracing::info!(error = %e, "rejected upload");
            return reject(StatusCode::UNPROCESSABLE_ENTITY, "invalid session log", e.violations());
        }
    };
    let id = session.session_id;
    // Session ids are restricted to a filename-safe alphabet by validation.
    let path = config.out_dir.join(format!("{id}.json"));
    let stored = tokio::task::spawn_blocking(move || write_new_atomic(&path, &body)).await;
    match stored {
        Ok(Ok(())) => {
            tracing::info!(%id, "stored session");
            (StatusCode::CREATED, Json(json!({ "id": id }))).into_response()
        }
        Ok(Err(e)) if e.kind() == io::ErrorKind::AlreadyExists => {
            reject(StatusCode::CONFLICT, format!("session `{id}` already exists"), Vec::new())
        }
        Ok(Err(e)) => {
            tracing::error!(%id, error = %e, "cannot store session");
            reject(StatusCode::INTERNAL_SERVER_ERROR, "cannot store session", Vec::new())
        }
        Err(e) => {
            tracing::error!(%id, error = %e, "storage task failed");
            reject(StatusCode::INTERNAL_SERVER_ERROR, "cannot store session", Vec::new())
        }
    }
}

/// Serves until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    config: CollectorConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    std::fs::create_dir_all(&config.out_dir)?;
    axum::serve(listener, router(config)).with_graceful_shutdown(shutdown).await
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(addr: SocketAddr, config: CollectorConfig) -> io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, out = %config.out_dir.display(), "collector listening");
    serve_on(listener, config, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
