//! HTTP gateway: one pipeline run per request, with the private fields
//! of the report withheld unless a loopback caller asks for them.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{ConnectInfo, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::backend::AuditLog;
use crate::pipeline::{Assets, Pipeline, PipelineConfig, PipelineFailure};
use crate::{Error, Result};

#[derive(Clone)]
pub struct AppState {
    pub config: Arc<PipelineConfig>,
    pub assets: Arc<Assets>,
}

#[derive(Debug, Deserialize)]
struct AskRequest {
    task: String,
    #[serde(default)]
    include_private: bool,
}

/// Build the API router.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/ask", post(ask))
        .route("/v1/health", get(health))
        .with_state(state)
}

/// Serve until ctrl-c.
pub async fn serve(
    config: Arc<PipelineConfig>,
    assets: Arc<Assets>,
    listener: tokio::net::TcpListener,
) -> Result<()> {
    let app = router(AppState { config, assets });
    axum::serve(
        listener,
        app.into_make_service_with_connect_info::<SocketAddr>(),
    )
    .with_graceful_shutdown(async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
    .map_err(Error::Io)
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

async fn ask(
    State(state): State<AppState>,
    ConnectInfo(addr): ConnectInfo<SocketAddr>,
    body: Bytes,
) -> (StatusCode, Json<Value>) {
    let request: AskRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            return (
                StatusCode::BAD_REQUEST,
                Json(json!({"error": format!("malformed request body: {e}")})),
            )
        }
    };
    if request.task.trim().is_empty() {
        return (
            StatusCode::BAD_REQUEST,
            Json(json!({"error": "task must not be empty"})),
        );
    }
    let audit = match &state.config.paths.audit_log {
        Some(path) => match AuditLog::with_sink(path) {
            Ok(log) => log,
            Err(e) => {
                return (
                    StatusCode::INTERNAL_SERVER_ERROR,
                    Json(json!({"error": format!("audit sink unavailable: {}", e.kind())})),
                )
            }
        },
        None => AuditLog::in_memory(),
    };
    let pipeline = match Pipeline::from_config(state.config.clone(), state.assets.clone(), audit) {
        Ok(p) => p,
        Err(e) => {
            return (
                StatusCode::INTERNAL_SERVER_ERROR,
                Json(json!({"error": format!("pipeline unavailable: {}", e.kind())})),
            )
        }
    };
    match pipeline.run_task(&request.task).await {
        Ok(report) => {
            let value = if request.include_private && addr.ip().is_loopback() {
                serde_json::to_value(&report).expect("report serializes")
            } else {
                report.redacted_value()
            };
            (StatusCode::OK, Json(value))
        }
        Err(failure) => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(json!({"error": sanitized_error(&failure, state.config.enable_ampp)})),
        ),
    }
}

/// Error text safe to put on the wire. With the privacy layer on, raw
/// entity surfaces are replaced by their placeholders; if the failure
/// hit before the placeholder vocabulary existed, the details are
/// withheld entirely.
pub fn sanitized_error(failure: &PipelineFailure, privacy_on: bool) -> String {
    if !privacy_on {
        return failure.error.to_string();
    }
    if failure.partial.task_anonymized.is_empty() {
        format!(
            "{} error before anonymization was established; details withheld",
            failure.error.kind()
        )
    } else {
        failure
            .partial
            .privacy_box
            .anonymize(&failure.error.to_string())
    }
}
