use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cfxplain_core::{CatalogError, CspError, ExplainError};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown catalog {0:?}")]
    CatalogNotFound(String),
    #[error("catalog id {0:?} is already registered")]
    CatalogExists(String),
    #[error("unknown session {0:?}")]
    SessionNotFound(String),
    #[error("session is at revision {current}, request was made against {given}")]
    RevisionConflict { current: u64, given: u64 },
    #[error("constraint id {0:?} is already in use")]
    DuplicateId(String),
    #[error("no foreground constraint {0:?} to change")]
    UnknownTarget(String),
    #[error("{state:?} is not a state of the relaxation space for {id:?}")]
    UnknownState { id: String, state: String },
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("snapshot I/O failed: {0}")]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::CatalogNotFound(_) | ServiceError::SessionNotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::RevisionConflict { .. } | ServiceError::CatalogExists(_) => StatusCode::CONFLICT,
            ServiceError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::CatalogNotFound(_) => "catalog_not_found",
            ServiceError::CatalogExists(_) => "catalog_exists",
            ServiceError::SessionNotFound(_) => "session_not_found",
            ServiceError::RevisionConflict { .. } => "revision_conflict",
            ServiceError::DuplicateId(_) => "duplicate_id",
            ServiceError::UnknownTarget(_) => "unknown_target",
            ServiceError::UnknownState { .. } => "unknown_state",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Catalog(_) | ServiceError::Csp(_) => "invalid_constraint",
            ServiceError::Explain(_) => "explain_failed",
            ServiceError::Io(_) => "io_error",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = json!({"error": self.code(), "message": self.to_string()});
        (self.status(), Json(body)).into_response()
    }
}
