//! JSON-over-HTTP access to a loaded dataset and its knowledge base.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex as LogMutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use flexq_core::dataset::{ColumnKind, DatasetError};
use flexq_core::kb::KbError;
use flexq_core::query::{parse_query, Condition, FuzzyQuery, ParseError, QueryError, Selection};
use flexq_core::session::{Session, SessionError};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use tokio::sync::{Mutex, RwLock};
use tower_http::cors::{Any, CorsLayer};

/// Shared state: reads take the lock briefly, mutations also hold the
/// writer slot for their whole run.
pub struct AppState {
    session: RwLock<Session>,
    writer: Mutex<()>,
    alpha: f64,
    log: LogMutex<Vec<String>>,
}

impl AppState {
    pub fn new(session: Session, alpha: f64) -> Arc<Self> {
        Arc::new(Self {
            session: RwLock::new(session),
            writer: Mutex::new(()),
            alpha,
            log: LogMutex::new(Vec::new()),
        })
    }

    /// Held by a mutation in flight; other mutations get 409 meanwhile.
    pub fn writer(&self) -> &Mutex<()> {
        &self.writer
    }

    pub async fn snapshot(&self) -> Session {
        self.session.read().await.clone()
    }

    pub fn query_log(&self) -> Vec<String> {
        self.log.lock().expect("log lock").clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl ToString) -> Self {
        Self {
            status,
            body: json!({"error": message.to_string(), "kind": kind}),
        }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

fn json_body(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json; charset=utf-8")], body).into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_body(self.status, self.body.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        let mut err = Self::new(StatusCode::BAD_REQUEST, "syntax", &e);
        if let ParseError::Syntax {
            offset,
            expected,
            found,
        } = &e
        {
            err.body["offset"] = json!(offset);
            err.body["expected"] = json!(expected);
            err.body["found"] = json!(found);
        }
        err
    }
}

impl From<KbError> for ApiError {
    fn from(e: KbError) -> Self {
        match e {
            KbError::UnknownAttribute { .. } => Self::new(StatusCode::NOT_FOUND, "unknown_attribute", e),
            KbError::UnknownLabel { .. } => Self::new(StatusCode::BAD_REQUEST, "unknown_label", e),
            KbError::AmbiguousLabel { .. } => Self::new(StatusCode::BAD_REQUEST, "ambiguous_label", e),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "knowledge_base", other),
        }
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Parse(p) => p.into(),
            QueryError::Kb(k) => k.into(),
            QueryError::UnknownAttribute(_) => Self::new(StatusCode::NOT_FOUND, "unknown_attribute", e),
            QueryError::UnknownColumn(_) => Self::new(StatusCode::NOT_FOUND, "unknown_column", e),
            other => Self::bad_request(other),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Dataset(DatasetError::UnknownRow(_)) => Self::new(StatusCode::NOT_FOUND, "unknown_row", e),
            SessionError::Kb(k) => k.into(),
            other => Self::bad_request(other),
        }
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let s = state.session.read().await;
    let body = json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "kb_version": s.kb().version(),
        "rows": s.dataset().row_count(),
        "queries": state.log.lock().expect("log lock").len(),
    });
    json_body(StatusCode::OK, body.to_string())
}

async fn attributes(State(state): State<Arc<AppState>>) -> Response {
    let s = state.session.read().await;
    let ds = s.dataset();
    let columns: Vec<Value> = ds
        .columns()
        .iter()
        .map(|c| {
            let terms = match c.kind {
                ColumnKind::Numeric => s
                    .kb()
                    .variable(&c.name)
                    .ok()
                    .map(|v| json!(v.labels())),
                ColumnKind::Text => None,
            };
            json!({"name": c.name, "kind": c.kind, "terms": terms})
        })
        .collect();
    let body = json!({"dataset": ds.name, "rows": ds.row_count(), "columns": columns});
    json_body(StatusCode::OK, body.to_string())
}

async fn membership(State(state): State<Arc<AppState>>, Path(attr): Path<String>) -> Result<Response, ApiError> {
    let s = state.session.read().await;
    let v = s.kb().variable(&attr)?;
    let body = json!({
        "attribute": v.attribute,
        "domain": [v.domain.0, v.domain.1],
        "terms": v.terms,
    });
    Ok(json_body(StatusCode::OK, body.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryBody {
    text: Option<String>,
    conditions: Option<Vec<Condition>>,
    select: Option<Vec<String>>,
    alpha: Option<f64>,
}

async fn query(
    State(state): State<Arc<AppState>>,
    body: Result<Json<QueryBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let s = state.session.read().await;
    let q = match (body.text, body.conditions) {
        (Some(text), None) => parse_query(&text)?,
        (None, Some(conditions)) => {
            let select = match body.select {
                Some(cols) if !cols.is_empty() => Selection::Columns(cols),
                _ => Selection::All,
            };
            FuzzyQuery::new(select, s.dataset().name.clone(), conditions)?
        }
        _ => return Err(ApiError::bad_request("body needs exactly one of `text` or `conditions`")),
    };
    let result = s.query(&q, body.alpha.unwrap_or(state.alpha))?;
    state.log.lock().expect("log lock").push(q.to_string());
    Ok(json_body(StatusCode::OK, result.to_json()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowBody {
    cells: Map<String, Value>,
}

fn cell_text(column: &str, v: &Value) -> Result<String, ApiError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(ApiError::bad_request(format!("cell `{column}` must be a string or a number"))),
    }
}

async fn insert_row(
    State(state): State<Arc<AppState>>,
    body: Result<Json<RowBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let cells = body
        .cells
        .iter()
        .map(|(k, v)| Ok((k.clone(), cell_text(k, v)?)))
        .collect::<Result<Vec<_>, ApiError>>()?;
    let Ok(_slot) = state.writer.try_lock() else {
        return Err(ApiError::new(StatusCode::CONFLICT, "busy", "another mutation is in progress"));
    };
    let mut next = state.snapshot().await;
    let (row, updates) = next.insert_row(&cells)?;
    *state.session.write().await = next;
    let body = json!({"row": row, "updates": updates});
    Ok(json_body(StatusCode::CREATED, body.to_string()))
}

async fn delete_row(State(state): State<Arc<AppState>>, Path(id): Path<usize>) -> Result<Response, ApiError> {
    let Ok(_slot) = state.writer.try_lock() else {
        return Err(ApiError::new(StatusCode::CONFLICT, "busy", "another mutation is in progress"));
    };
    let mut next = state.snapshot().await;
    let header: Vec<String> = next.dataset().columns().iter().map(|c| c.name.clone()).collect();
    let (removed, updates) = next.delete_row(id)?;
    *state.session.write().await = next;
    let removed: Map<String, Value> = header.into_iter().zip(removed.into_iter().map(Value::String)).collect();
    let body = json!({"removed": removed, "updates": updates});
    Ok(json_body(StatusCode::OK, body.to_string()))
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any);
    Router::new()
        .route("/api/health", get(health))
        .route("/api/attributes", get(attributes))
        .route("/api/mf/{attr}", get(membership))
        .route("/api/query", post(query))
        .route("/api/rows", post(insert_row))
        .route("/api/rows/{id}", delete(delete_row))
        .layer(cors)
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(session: Session, alpha: f64, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(session, alpha))).await
}
