//! JSON-over-HTTP front of [`AnnotationService`].

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{AnnotateError, AnnotationService, AnnotationSubmission};
use crate::metrics::Weighting;

#[derive(Clone)]
struct AppState {
    service: Arc<AnnotationService>,
    static_dir: Option<Arc<PathBuf>>,
}

/// Error body: `{"error": message, "field": name?}`.
#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            field: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(field) = self.field {
            body["field"] = json!(field);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<AnnotateError> for ApiError {
    fn from(e: AnnotateError) -> Self {
        let status = match &e {
            AnnotateError::UnknownAnnotator(_) => StatusCode::UNAUTHORIZED,
            AnnotateError::LanguageNotAssigned { .. } => StatusCode::FORBIDDEN,
            AnnotateError::UnknownSample { .. } | AnnotateError::UnknownProvider { .. } => StatusCode::NOT_FOUND,
            AnnotateError::InvalidField { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            AnnotateError::Store(_) | AnnotateError::SchemaTooNew { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let field = match &e {
            AnnotateError::InvalidField { field, .. } => Some(field.clone()),
            AnnotateError::UnknownSample { .. } => Some("sample_id".to_string()),
            AnnotateError::UnknownProvider { .. } => Some("provider_id".to_string()),
            _ => None,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %e, "annotation request failed");
        }
        ApiError {
            status,
            message: e.to_string(),
            field,
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn annotator(state: &AppState, headers: &HeaderMap) -> Result<String, ApiError> {
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing bearer token"))?;
    state
        .service
        .authenticate(token)
        .map(str::to_string)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "invalid bearer token"))
}

#[derive(Deserialize)]
struct LanguageQuery {
    language: String,
}

#[derive(Deserialize)]
struct SliceQuery {
    language: String,
    provider_id: String,
    #[serde(default)]
    weighting: Weighting,
}

#[derive(Serialize)]
struct NextTask {
    task: Option<super::ReviewTask>,
    remaining: usize,
}

#[derive(Serialize)]
struct Me {
    annotator_id: String,
}

async fn me(State(state): State<AppState>, headers: HeaderMap) -> ApiResult<Me> {
    Ok(Json(Me {
        annotator_id: annotator(&state, &headers)?,
    }))
}

async fn next_task(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<LanguageQuery>,
) -> ApiResult<NextTask> {
    let who = annotator(&state, &headers)?;
    let tasks = state.service.tasks(&who, &q.language)?;
    let mut pending = tasks.into_iter().filter(|t| t.status == super::TaskStatus::Pending);
    let task = pending.next();
    let remaining = usize::from(task.is_some()) + pending.count();
    Ok(Json(NextTask { task, remaining }))
}

async fn list_tasks(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<LanguageQuery>,
) -> ApiResult<Vec<super::ReviewTask>> {
    let who = annotator(&state, &headers)?;
    Ok(Json(state.service.tasks(&who, &q.language)?))
}

/// Names the offending field from a deserialization failure.
fn field_of(path: &str, message: &str) -> Option<String> {
    if !path.is_empty() && path != "." {
        return Some(path.to_string());
    }
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

async fn submit(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<super::SubmitAck> {
    let who = annotator(&state, &headers)?;
    let de = &mut serde_json::Deserializer::from_slice(&body);
    let submission: AnnotationSubmission = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            field: field_of(&path, &message),
            message,
        }
    })?;
    Ok(Json(state.service.submit(&who, &submission)?))
}

async fn summary(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<SliceQuery>,
) -> ApiResult<super::Summary> {
    annotator(&state, &headers)?;
    Ok(Json(state.service.summarize(&q.language, &q.provider_id)?))
}

async fn agreement(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<SliceQuery>,
) -> ApiResult<super::AgreementReport> {
    annotator(&state, &headers)?;
    Ok(Json(state.service.agreement_report(&q.language, &q.provider_id, q.weighting)?))
}

async fn export(State(state): State<AppState>, headers: HeaderMap) -> ApiResult<Vec<super::AnnotationRecord>> {
    annotator(&state, &headers)?;
    Ok(Json(state.service.export()?))
}

async fn exclusions(State(state): State<AppState>, headers: HeaderMap) -> ApiResult<crate::IdSet> {
    annotator(&state, &headers)?;
    Ok(Json(state.service.derive_exclusions()?))
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "txt" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

async fn static_file(State(state): State<AppState>, uri: Uri) -> Response {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "not found").into_response();
    let Some(root) = state.static_dir.as_deref() else {
        return not_found();
    };
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return not_found();
    }
    let path = root.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => not_found(),
    }
}

/// Routes of the annotation API; files under `static_dir` are served for
/// any other GET path.
pub fn router(service: Arc<AnnotationService>, static_dir: Option<PathBuf>) -> Router {
    let state = AppState {
        service,
        static_dir: static_dir.map(Arc::new),
    };
    Router::new()
        .route("/api/me", get(me))
        .route("/api/tasks", get(list_tasks))
        .route("/api/tasks/next", get(next_task))
        .route("/api/annotations", post(submit))
        .route("/api/summary", get(summary))
        .route("/api/agreement", get(agreement))
        .route("/api/export", get(export))
        .route("/api/exclusions", get(exclusions))
        .fallback(get(static_file))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(
    listener: tokio::net::TcpListener,
    service: Arc<AnnotationService>,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    axum::serve(listener, router(service, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
