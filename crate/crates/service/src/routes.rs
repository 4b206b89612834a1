//! Request handlers.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{HeaderMap, HeaderName, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tmfix_core::analysis::analyze_session;
use tmfix_core::event::{decode_event, is_non_event_line};
use tmfix_core::session::build_session;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::{AppState, ServiceError};

pub const TOKEN_HEADER: &str = "x-ingest-token";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    /// 1-based line number within the request body.
    pub line: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestAck {
    pub accepted: usize,
    pub rejected: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_error: Option<LineError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub ack: Option<IngestAck>,
}

fn error(status: StatusCode, name: &str, message: impl Into<String>) -> Response {
    let body = ErrorBody {
        error: name.to_string(),
        message: message.into(),
        ack: None,
    };
    (status, Json(body)).into_response()
}

fn unavailable(e: &dyn std::error::Error) -> Response {
    let mut message = e.to_string();
    let mut cause = e.source();
    while let Some(c) = cause {
        message = format!("{message}: {c}");
        cause = c.source();
    }
    tracing::error!(error = %message, "storage failure");
    error(StatusCode::SERVICE_UNAVAILABLE, "StorageUnavailable", message)
}

fn authorized(state: &AppState, headers: &HeaderMap) -> bool {
    match &state.config.token {
        None => true,
        Some(t) => headers
            .get(TOKEN_HEADER)
            .is_some_and(|v| v.as_bytes() == t.as_bytes()),
    }
}

fn unauthorized() -> Response {
    error(StatusCode::UNAUTHORIZED, "Unauthorized", format!("missing or wrong {TOKEN_HEADER} header"))
}

async fn ingest(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Result<Bytes, BytesRejection>,
) -> Response {
    if !authorized(&state, &headers) {
        return unauthorized();
    }
    let body = match body {
        Ok(b) => b,
        Err(r) if r.status() == StatusCode::PAYLOAD_TOO_LARGE => {
            return error(
                StatusCode::PAYLOAD_TOO_LARGE,
                "PayloadTooLarge",
                format!("batch exceeds {} bytes", state.config.max_batch_bytes),
            )
        }
        Err(r) => return error(StatusCode::BAD_REQUEST, "MalformedBatch", r.body_text()),
    };
    let Ok(text) = std::str::from_utf8(&body) else {
        return error(StatusCode::BAD_REQUEST, "MalformedBatch", "body is not UTF-8");
    };

    let mut ack = IngestAck {
        accepted: 0,
        rejected: 0,
        first_error: None,
    };
    let mut valid = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if is_non_event_line(line) {
            continue;
        }
        match decode_event(line) {
            Ok(e) => valid.push((line.to_string(), e)),
            Err(e) => {
                ack.rejected += 1;
                ack.first_error.get_or_insert(LineError {
                    line: i + 1,
                    error: e.name().to_string(),
                });
            }
        }
    }
    ack.accepted = valid.len();
    if ack.accepted == 0 {
        let message = if ack.rejected == 0 {
            "batch contains no events".to_string()
        } else {
            format!("all {} lines rejected", ack.rejected)
        };
        let body = ErrorBody {
            error: "MalformedBatch".into(),
            message,
            ack: Some(ack),
        };
        return (StatusCode::BAD_REQUEST, Json(body)).into_response();
    }

    let st = state.clone();
    let result = tokio::task::spawn_blocking(move || {
        let refs: Vec<_> = valid.iter().map(|(l, e)| (l.as_str(), e)).collect();
        st.store.append(&refs)
    })
    .await;
    match result {
        Ok(Ok(())) => {
            tracing::debug!(accepted = ack.accepted, rejected = ack.rejected, "batch appended");
            (StatusCode::ACCEPTED, Json(ack)).into_response()
        }
        Ok(Err(e)) => unavailable(&e),
        Err(e) => unavailable(&e),
    }
}

async fn session_report(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> Response {
    if !authorized(&state, &headers) {
        return unauthorized();
    }
    let st = state.clone();
    let sid = id.clone();
    let events = match tokio::task::spawn_blocking(move || st.store.session_events(&sid)).await {
        Ok(Ok(ev)) => ev,
        Ok(Err(e)) => return unavailable(&e),
        Err(e) => return unavailable(&e),
    };
    let cfg = &state.config;
    let Some(session) = build_session(&id, events, &cfg.norm) else {
        return error(StatusCode::NOT_FOUND, "UnknownSession", format!("no admitted session {id:?}"));
    };
    match analyze_session(&session, &cfg.norm, &cfg.policy, cfg.alpha) {
        Ok(a) => (
            StatusCode::OK,
            [(axum::http::header::CONTENT_TYPE, "application/json")],
            a.to_json(),
        )
            .into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "InvalidPolicy", e.to_string()),
    }
}

fn cors(allowlist: &[String]) -> Result<CorsLayer, ServiceError> {
    let origin = if allowlist.is_empty() {
        AllowOrigin::any()
    } else {
        let origins = allowlist
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| ServiceError::InvalidOrigin(o.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        AllowOrigin::list(origins)
    };
    Ok(CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([
            axum::http::header::CONTENT_TYPE,
            HeaderName::from_static(TOKEN_HEADER),
        ]))
}

pub fn router(state: Arc<AppState>) -> Result<Router, ServiceError> {
    let cors = cors(&state.config.cors_allowlist)?;
    let limit = state.config.max_batch_bytes;
    Ok(Router::new()
        .route("/v1/events", post(ingest).layer(DefaultBodyLimit::max(limit)))
        .route("/v1/sessions/{id}/report", get(session_report))
        .layer(cors)
        .with_state(state))
}
