//! JSON HTTP API, versioned under `/api/v1`.
//!
//! | method | path                                       | body / query                 | reply               |
//! |--------|--------------------------------------------|------------------------------|---------------------|
//! | POST   | `/session`                                 | `{alias}`                    | session descriptor  |
//! | GET    | `/session/{id}`                            |                              | session descriptor  |
//! | GET    | `/session/{id}/trial/{index}`              |                              | trial payload       |
//! | POST   | `/session/{id}/familiarization/complete`   |                              | session descriptor  |
//! | POST   | `/response`                                | response request             | ack                 |
//! | GET    | `/report`                                  | `?category=..&exclusions=..` | study report        |
//! | GET    | `/health`                                  |                              | health              |
//!
//! Errors are `{error, message}` with a 4xx/5xx status.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::log::LogError;
use crate::report::ReportFilters;
use crate::service::{ServiceError, TrialService};
use crate::study::{ResponseRequest, StudyError};

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: String) -> Self {
        Self { status, body: ErrorBody { error: error.into(), message } }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        use StatusCode as S;
        let msg = e.to_string();
        let (status, code) = match &e {
            ServiceError::Study(s) | ServiceError::Log(LogError::Replay(s)) => match s {
                StudyError::UnknownSession(_) => (S::NOT_FOUND, "unknown_session"),
                StudyError::IndexOutOfRange { .. } => (S::NOT_FOUND, "index_out_of_range"),
                StudyError::Duplicate { .. } => (S::CONFLICT, "duplicate"),
                StudyError::WrongStage { .. } => (S::CONFLICT, "wrong_stage"),
                StudyError::NotPending { .. } => (S::CONFLICT, "not_pending"),
                StudyError::NoData => (S::CONFLICT, "no_data"),
                StudyError::RatingOutOfRange(_) => (S::UNPROCESSABLE_ENTITY, "rating_out_of_range"),
                StudyError::TrialMismatch { .. } => (S::UNPROCESSABLE_ENTITY, "trial_mismatch"),
                StudyError::InvalidConfig(_) => (S::UNPROCESSABLE_ENTITY, "invalid_config"),
                StudyError::NotInitialized => (S::INTERNAL_SERVER_ERROR, "not_initialized"),
                StudyError::Corrupt(_) => (S::INTERNAL_SERVER_ERROR, "corrupt"),
            },
            ServiceError::Log(_) => (S::INTERNAL_SERVER_ERROR, "storage"),
            ServiceError::MissingTrial(_) => (S::INTERNAL_SERVER_ERROR, "missing_trial"),
        };
        ApiError::new(status, code, msg)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct CreateSession {
    #[serde(default)]
    pub alias: String,
}

/// Runs a blocking service call (file sync, lock waits) off the runtime.
async fn blocking<T: Send + 'static>(
    svc: &Arc<TrialService>,
    f: impl FnOnce(&TrialService) -> Result<T, ServiceError> + Send + 'static,
) -> ApiResult<T> {
    let svc = svc.clone();
    match tokio::task::spawn_blocking(move || f(&svc)).await {
        Ok(r) => r.map(Json).map_err(ApiError::from),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())),
    }
}

async fn create_session(
    State(svc): State<Arc<TrialService>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> impl IntoResponse {
    let alias = match body {
        Ok(Json(b)) => b.alias,
        Err(e) => return Err(ApiError::from(e)),
    };
    blocking(&svc, move |s| s.create_session(&alias)).await.map(|j| (StatusCode::CREATED, j))
}

async fn get_session(State(svc): State<Arc<TrialService>>, Path(id): Path<String>) -> impl IntoResponse {
    svc.session(&id).map(Json).map_err(ApiError::from)
}

async fn get_trial(State(svc): State<Arc<TrialService>>, Path((id, index)): Path<(String, usize)>) -> impl IntoResponse {
    svc.get_trial(&id, index).map(Json).map_err(ApiError::from)
}

async fn complete_familiarization(State(svc): State<Arc<TrialService>>, Path(id): Path<String>) -> impl IntoResponse {
    blocking(&svc, move |s| s.complete_familiarization(&id)).await
}

async fn submit_response(
    State(svc): State<Arc<TrialService>>,
    body: Result<Json<ResponseRequest>, JsonRejection>,
) -> impl IntoResponse {
    let Json(req) = body?;
    blocking(&svc, move |s| s.submit_response(&req)).await
}

async fn report(
    State(svc): State<Arc<TrialService>>,
    filters: Result<Query<ReportFilters>, axum::extract::rejection::QueryRejection>,
) -> impl IntoResponse {
    let Query(filters) =
        filters.map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_request", e.body_text()))?;
    svc.report(&filters).map(Json).map_err(ApiError::from)
}

async fn health(State(svc): State<Arc<TrialService>>) -> impl IntoResponse {
    Json(svc.health())
}

pub fn router(service: Arc<TrialService>) -> Router {
    let api = Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}", get(get_session))
        .route("/session/{id}/trial/{index}", get(get_trial))
        .route("/session/{id}/familiarization/complete", post(complete_familiarization))
        .route("/response", post(submit_response))
        .route("/report", get(report))
        .route("/health", get(health))
        .with_state(service);
    Router::new().nest("/api/v1", api)
}

/// Serves until the process is stopped.
pub async fn serve(service: Arc<TrialService>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service)).await
}
