use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use hypocanvas_core::canvas::CanvasError;
use hypocanvas_core::data::IngestError;
use hypocanvas_core::generation::GenerationError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Wire form of every error: a stable `code`, a human `message`, and
/// optional structured `detail` (null when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

impl ErrorBody {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code: code.into(), message: message.into(), detail: Value::Null }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }
}

impl From<&GenerationError> for ErrorBody {
    fn from(e: &GenerationError) -> Self {
        let body = ErrorBody::new(e.code(), e.to_string());
        match e {
            GenerationError::ProviderTimeout { provider, after } => {
                body.with_detail(json!({ "provider": provider, "after_ms": after.as_millis() as u64 }))
            }
            _ => body,
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody::new(code, message) }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = detail;
        self
    }

    pub fn not_found(code: &str, what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, format!("{what} not found"))
    }

    pub fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn stale(current: u64, given: u64) -> Self {
        Self::new(StatusCode::CONFLICT, "StaleVersion", format!("doc_version {given} is stale; current is {current}"))
            .with_detail(json!({ "current": current, "given": given }))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl From<CanvasError> for ApiError {
    fn from(e: CanvasError) -> Self {
        let status = match e {
            CanvasError::UnknownNode(_) | CanvasError::UnknownSourceNode(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let detail = match &e {
            CanvasError::InvalidSpec(report) => serde_json::to_value(report).unwrap_or(Value::Null),
            _ => Value::Null,
        };
        ApiError::new(status, e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        let detail = match &e {
            IngestError::RaggedRows { row, expected, found } => {
                json!({ "row": row, "expected": expected, "found": found })
            }
            IngestError::InvalidUtf8 { row } => json!({ "row": row }),
            IngestError::DuplicateHeader(h) => json!({ "header": h }),
            _ => Value::Null,
        };
        ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageError", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
