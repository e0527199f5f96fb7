//! REST surface:
//!
//! | method | path                          | success |
//! |--------|-------------------------------|---------|
//! | POST   | `/v1/sessions`                | 201     |
//! | POST   | `/v1/sessions/{id}/intents`   | 200     |
//! | GET    | `/v1/sessions/{id}`           | 200     |
//! | GET    | `/v1/healthz`                 | 200     |
//!
//! Errors carry `{"error": "..."}` with 404 (unknown session), 409 (sequence
//! conflict), 410 (session ended) or 503 (no protocol loaded).

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

use super::{IntentRequest, IntentResponse, ServiceError, TriageService};

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub response: IntentResponse,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IntentBody {
    pub sequence: u64,
    pub utterance: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::Unavailable => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionEnded(_) => StatusCode::GONE,
            ServiceError::SequenceConflict { .. } => StatusCode::CONFLICT,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

pub fn router(service: Arc<TriageService>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/intents", post(handle_intent))
        .route("/v1/healthz", get(healthz))
        .layer(CorsLayer::permissive())
        .with_state(service)
}

async fn create_session(
    State(service): State<Arc<TriageService>>,
) -> Result<impl IntoResponse, ServiceError> {
    let (session_id, response) = service.create_session()?;
    Ok((
        StatusCode::CREATED,
        Json(CreatedSession {
            session_id,
            response,
        }),
    ))
}

async fn handle_intent(
    State(service): State<Arc<TriageService>>,
    Path(session_id): Path<String>,
    Json(body): Json<IntentBody>,
) -> Result<Json<IntentResponse>, ServiceError> {
    let request = IntentRequest {
        session_id,
        sequence: body.sequence,
        utterance: body.utterance,
    };
    service.handle_intent(&request).map(Json)
}

async fn get_session(
    State(service): State<Arc<TriageService>>,
    Path(session_id): Path<String>,
) -> Result<impl IntoResponse, ServiceError> {
    service.get_session(&session_id).map(Json)
}

async fn healthz(State(service): State<Arc<TriageService>>) -> Response {
    match service.protocol_version() {
        Some(version) => {
            Json(json!({ "status": "ok", "protocol_version": version })).into_response()
        }
        None => ServiceError::Unavailable.into_response(),
    }
}
