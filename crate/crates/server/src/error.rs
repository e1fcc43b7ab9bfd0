use std::path::PathBuf;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use commdyn_core::EngineError;
use serde_json::json;

/// Failure to start the service.
#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot load corpus {path}: {source}")]
    Corpus { path: PathBuf, source: EngineError },

    #[error("session directory {path}: {source}")]
    Sessions {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Error body returned by every endpoint: `{"error": {"code", "message"}}`.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_session",
            format!("no session `{id}`"),
        )
    }

    pub fn unknown_class(class: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_class",
            format!("no trained model for class `{class}`"),
        )
    }

    pub fn unknown_pair(a: &str, b: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_pair",
            format!("no messages between `{a}` and `{b}`"),
        )
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match &e {
            EngineError::NeedsBothClasses | EngineError::EmptyTraining => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            EngineError::UnknownEntity(_) => StatusCode::NOT_FOUND,
            EngineError::Io(_) | EngineError::Json(_) | EngineError::Csv(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
