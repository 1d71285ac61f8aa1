use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use leraat_core::advisor::UiEvent;
use leraat_core::telemetry::{parse_telemetry_message, TelemetryError, TelemetryStore};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::{mpsc, watch};
use tower_http::services::ServeDir;
use tracing::debug;

use crate::session::SessionHandle;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone)]
pub struct AppState {
    pub telemetry: Arc<TelemetryStore>,
    pub session: SessionHandle,
    /// Flips to true when the server starts shutting down; open streams end.
    pub closing: watch::Receiver<bool>,
}

pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let mut app = Router::new()
        .route("/healthz", get(healthz))
        .route("/api/v1/telemetry", post(post_telemetry))
        .route("/api/v1/event", post(post_event))
        .route("/api/v1/state", get(get_state))
        .route("/api/v1/stream", get(stream))
        .with_state(state);
    if let Some(dir) = ui_dir {
        app = app.nest_service("/ui", ServeDir::new(dir));
    }
    app
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn unavailable() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "advisory session has stopped")
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "version": VERSION }))
}

async fn post_telemetry(State(app): State<AppState>, body: Bytes) -> Response {
    let (state, ecam) = match parse_telemetry_message(&body) {
        Ok(parsed) => parsed,
        Err(e @ TelemetryError::InvalidField { .. }) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    match app.telemetry.ingest(state, ecam) {
        Ok(Some(trigger)) => {
            debug!(kind = ?trigger.kind, at = trigger.at, "master alert");
            if app.session.post(UiEvent::MasterAlert(Box::new(trigger))).is_err() {
                return unavailable();
            }
            StatusCode::NO_CONTENT.into_response()
        }
        Ok(None) => StatusCode::NO_CONTENT.into_response(),
        Err(e @ TelemetryError::StaleTimestamp { .. }) => error(StatusCode::CONFLICT, e.to_string()),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}

#[derive(Deserialize)]
struct EventBody {
    event: String,
    #[serde(default)]
    text: Option<String>,
}

async fn post_event(State(app): State<AppState>, body: Bytes) -> Response {
    let parsed: EventBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid event body: {e}")),
    };
    let event = match parsed.event.as_str() {
        "query" => UiEvent::QueryButton,
        "arm" => UiEvent::ArmButton,
        "submit" => match parsed.text.and_then(UiEvent::submit) {
            Some(e) => e,
            None => return error(StatusCode::BAD_REQUEST, "submit requires non-empty text"),
        },
        other => return error(StatusCode::BAD_REQUEST, format!("unknown event `{other}`")),
    };
    match app.session.event(event).await {
        Ok(outcome) => Json(outcome).into_response(),
        Err(_) => unavailable(),
    }
}

async fn get_state(State(app): State<AppState>) -> Response {
    match app.session.snapshot().await {
        Ok(snapshot) => Json(snapshot).into_response(),
        Err(_) => unavailable(),
    }
}

async fn stream(State(app): State<AppState>) -> Response {
    let Ok(rx) = app.session.subscribe().await else { return unavailable() };
    Sse::new(frames(rx, app.closing.clone())).keep_alive(KeepAlive::default()).into_response()
}

fn frames(
    rx: mpsc::UnboundedReceiver<crate::session::PushFrame>,
    closing: watch::Receiver<bool>,
) -> impl Stream<Item = Result<Event, Infallible>> {
    futures::stream::unfold((rx, closing), |(mut rx, mut closing)| async move {
        let frame = tokio::select! {
            frame = rx.recv() => frame?,
            _ = closing.wait_for(|c| *c) => return None,
        };
        let event = Event::default()
            .id(frame.seq.to_string())
            .json_data(&frame)
            .unwrap_or_else(|_| Event::default().data("{}"));
        Some((Ok(event), (rx, closing)))
    })
}
