//! HTTP routes and the per-session WebSocket event stream.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;
use tower_http::services::ServeDir;

use crate::manager::{Event, ServiceError, SessionManager};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::TurnInFlight(_) => StatusCode::CONFLICT,
            ServiceError::CapacityExceeded(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::EmptyMessage => StatusCode::BAD_REQUEST,
            ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

pub fn router(manager: Arc<SessionManager>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/session", post(create_session))
        .route("/session/{id}/message", post(post_message))
        .route("/session/{id}/transcript", get(transcript))
        .route("/session/{id}/stream", get(stream))
        .route("/audio/{turn_ref}", get(audio))
        .with_state(manager);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn healthz(State(m): State<Arc<SessionManager>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "sessions": m.live_sessions() }))
}

async fn create_session(State(m): State<Arc<SessionManager>>) -> Result<(StatusCode, Json<serde_json::Value>), ServiceError> {
    let id = m.create_session()?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

#[derive(Deserialize)]
struct MessageBody {
    text: String,
}

async fn post_message(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    body: Result<Json<MessageBody>, JsonRejection>,
) -> Response {
    let Json(body) = match body {
        Ok(b) => b,
        Err(rejection) => {
            return (rejection.status(), Json(json!({ "error": rejection.body_text() }))).into_response()
        }
    };
    match m.post_message(&id, &body.text) {
        Ok(turn) => (StatusCode::ACCEPTED, Json(json!({ "turn": turn }))).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn transcript(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ServiceError> {
    let turns = m.get_transcript(&id)?;
    Ok(Json(json!({ "id": id, "turns": turns })))
}

async fn audio(State(m): State<Arc<SessionManager>>, Path(turn_ref): Path<String>) -> Response {
    match m.audio(&turn_ref) {
        Some(payload) => ([(header::CONTENT_TYPE, payload.mime)], payload.bytes).into_response(),
        None => (StatusCode::NOT_FOUND, Json(json!({ "error": format!("no audio for {turn_ref}") }))).into_response(),
    }
}

#[derive(Deserialize)]
struct StreamQuery {
    /// Skip events up to and including this seq (reconnecting clients).
    #[serde(default)]
    after: u64,
}

async fn stream(
    State(m): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    Query(q): Query<StreamQuery>,
    ws: WebSocketUpgrade,
) -> Result<Response, ServiceError> {
    let sub = m.subscribe(&id)?;
    Ok(ws.on_upgrade(move |socket| forward(socket, m, id, sub, q.after)))
}

async fn send(socket: &mut WebSocket, event: &Event) -> bool {
    socket.send(Message::Text(event.to_json().into())).await.is_ok()
}

async fn forward(
    mut socket: WebSocket,
    m: Arc<SessionManager>,
    id: String,
    sub: crate::manager::Subscription,
    after: u64,
) {
    let mut last = after;
    for event in sub.backlog.iter().filter(|e| e.seq > after) {
        if !send(&mut socket, event).await {
            return;
        }
        last = event.seq;
    }
    let mut live = sub.live;
    loop {
        tokio::select! {
            received = live.recv() => match received {
                Ok(event) if event.seq <= last => {}
                Ok(event) => {
                    if !send(&mut socket, &event).await {
                        return;
                    }
                    last = event.seq;
                }
                Err(RecvError::Lagged(_)) => {
                    let Ok(missed) = m.events_after(&id, last) else { break };
                    for event in missed {
                        if !send(&mut socket, &event).await {
                            return;
                        }
                        last = event.seq;
                    }
                }
                Err(RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}
