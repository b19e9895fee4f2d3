use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use harassment_core::active_learning::ActiveLearningError;

/// Startup and shutdown failures.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no annotator tokens configured")]
    NoTokens,
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("corrupt state in {0}: {1}")]
    CorruptState(String, String),
    #[error(transparent)]
    ActiveLearning(#[from] ActiveLearningError),
}

/// Uniform error body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or invalid bearer token")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<ActiveLearningError> for ApiError {
    fn from(e: ActiveLearningError) -> Self {
        use ActiveLearningError as E;
        let (status, code) = match &e {
            E::TaskNotFound(_) | E::NotInPool(_) => (StatusCode::NOT_FOUND, "task_not_found"),
            E::DuplicateAnnotator { .. } => (StatusCode::CONFLICT, "duplicate_annotator"),
            E::InvalidState { .. } => (StatusCode::CONFLICT, "invalid_state"),
            E::RoundClosed(_) => (StatusCode::CONFLICT, "round_closed"),
            E::RoundsExhausted(_) => (StatusCode::CONFLICT, "rounds_exhausted"),
            E::IncompleteTasks(_) => (StatusCode::CONFLICT, "incomplete_tasks"),
            E::ZeroBatch => (StatusCode::BAD_REQUEST, "bad_request"),
            E::Classifier(_) => (StatusCode::UNPROCESSABLE_ENTITY, "training_failed"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::ActiveLearning(e) => e.into(),
            other => Self::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, message = %self.message, "request failed");
        }
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}
