//! API error envelope with machine-readable codes.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::json;

use vigil_core::alarm::AlarmError;
use vigil_core::state::StateError;
use vigil_core::store::StoreError;
use vigil_core::summarize::SummarizeError;

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    pub code: &'static str,
    pub message: String,
    #[serde(skip)]
    pub status: StatusCode,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            status,
        }
    }

    pub fn auth_failure(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "AUTH_FAILURE", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", message)
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MALFORMED_EVENT", message)
    }

    pub fn payload_too_large(message: impl Into<String>) -> Self {
        Self::new(StatusCode::PAYLOAD_TOO_LARGE, "PAYLOAD_TOO_LARGE", message)
    }
}

impl From<StateError> for ApiError {
    fn from(e: StateError) -> Self {
        match &e {
            StateError::MalformedEvent(_) => {
                Self::new(StatusCode::BAD_REQUEST, "MALFORMED_EVENT", e.to_string())
            }
            StateError::UnknownSite(_) => {
                Self::new(StatusCode::NOT_FOUND, "UNKNOWN_SITE", e.to_string())
            }
            StateError::NotFound(_) => Self::not_found(e.to_string()),
            StateError::DuplicateId(_) => {
                Self::new(StatusCode::CONFLICT, "DUPLICATE_ID", e.to_string())
            }
            StateError::Alarm(inner) => match inner {
                AlarmError::NotFound(_) => Self::not_found(e.to_string()),
                AlarmError::IllegalTransition { .. } => {
                    Self::new(StatusCode::CONFLICT, "ILLEGAL_TRANSITION", e.to_string())
                }
            },
            StateError::Inconsistent(_) => Self::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "INTERNAL",
                e.to_string(),
            ),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::State(inner) => inner.into(),
            // log/IO failures: the detector must retry, nothing was
            // acknowledged
            other => Self::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "STORAGE_UNAVAILABLE",
                other.to_string(),
            ),
        }
    }
}

impl From<SummarizeError> for ApiError {
    fn from(e: SummarizeError) -> Self {
        match &e {
            SummarizeError::EmptyDocument => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "EMPTY_DOCUMENT", e.to_string())
            }
            SummarizeError::AllStopwords => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "ALL_STOPWORDS", e.to_string())
            }
            SummarizeError::InvalidTarget(_) => {
                Self::new(StatusCode::BAD_REQUEST, "INVALID_TARGET", e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "error": { "code": self.code, "message": self.message }
        });
        (self.status, Json(body)).into_response()
    }
}
