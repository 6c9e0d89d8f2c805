use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use concord::steer::Session;
use concord::Error;
use serde::Serialize;

/// Error payload: `{"error": {"code", "message", "chain"?}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    /// Document ids of the must-link chain behind an inconsistency.
    pub chain: Option<Vec<String>>,
}

#[derive(Serialize)]
struct Body<'a> {
    error: Inner<'a>,
}

#[derive(Serialize)]
struct Inner<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    chain: Option<&'a [String]>,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code: "bad_request".into(), message: message.into(), chain: None }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal".into(), message: message.into(), chain: None }
    }

    /// Like `From<Error>`, but names documents by id.
    pub fn from_session(e: Error, s: &Session) -> Self {
        match e {
            Error::Inconsistent { a, b, chain } => {
                let ids = s.describe_chain(&chain);
                let ends = s.describe_chain(&[a, b]);
                Self {
                    status: StatusCode::CONFLICT,
                    code: "inconsistent_constraints".into(),
                    message: format!("cannot-link {} / {} contradicts must-link chain {}", ends[0], ends[1], ids.join(" - ")),
                    chain: Some(ids),
                }
            }
            Error::DuplicatePair(a, b) => {
                let ids = s.describe_chain(&[a, b]);
                Self {
                    status: StatusCode::CONFLICT,
                    code: "duplicate_pair".into(),
                    message: format!("pair ({}, {}) is already constrained", ids[0], ids[1]),
                    chain: None,
                }
            }
            other => other.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownSession(_) | Error::CorpusNotFound(_) | Error::UnknownConstraint(_) => StatusCode::NOT_FOUND,
            Error::DuplicatePair(..) | Error::Inconsistent { .. } => StatusCode::CONFLICT,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            Error::Parse { .. } | Error::InvalidParameter(_) | Error::UnknownDocument(_) | Error::SelfConstraint(_) => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self { status, code: e.code().into(), message: e.to_string(), chain: None }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body { error: Inner { code: &self.code, message: &self.message, chain: self.chain.as_deref() } };
        (self.status, Json(body)).into_response()
    }
}
