//! JSON-over-HTTP front end for [`Service`].
//!
//! Credentials travel in headers (`x-passcode`, `x-student-token`) except for
//! ingestion, where the public passcode is part of the batch body. Errors are
//! `{"error_code", "message"}` with the codes from [`Error::code`].

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use super::{IngestBatch, Service};
use crate::error::{Error, ErrorKind};
use crate::summarizer::Strategy;

pub const PASSCODE_HEADER: &str = "x-passcode";
pub const STUDENT_TOKEN_HEADER: &str = "x-student-token";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

pub fn status_for(e: &Error) -> StatusCode {
    match (e.kind(), e) {
        (_, Error::UnknownPasscode) => StatusCode::UNAUTHORIZED,
        (_, Error::Unauthorized(_)) => StatusCode::FORBIDDEN,
        (_, Error::DuplicateCourse(_) | Error::SessionAlreadyOpen(_) | Error::SessionClosed | Error::SessionNotClosed) => {
            StatusCode::CONFLICT
        }
        (ErrorKind::NotFound, _) => StatusCode::NOT_FOUND,
        (ErrorKind::Internal, _) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = status_for(&self.0);
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        (status, Json(ErrorBody { error_code: self.0.code().to_string(), message: self.0.to_string() })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn header(headers: &HeaderMap, name: &str) -> Result<String, Error> {
    headers
        .get(name)
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
        .ok_or_else(|| Error::Unauthorized(format!("missing {name} header")))
}

fn body<T: DeserializeOwned>(bytes: &[u8], malformed: fn(String) -> Error) -> Result<T, Error> {
    serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))
}

/// Runs a synchronous service call off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json).map_err(ApiError),
        Err(e) => Err(ApiError(Error::Storage(format!("worker failed: {e}")))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterCourseRequest {
    pub course_code: String,
    #[serde(default)]
    pub title: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OpenSessionRequest {
    #[serde(default)]
    pub recording_start_ms: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CloseSessionRequest {
    #[serde(default)]
    pub recording_end_ms: Option<i64>,
    pub recording_uri: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UsageRequest {
    pub session: String,
    pub start_s: i64,
    pub end_s: i64,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SessionQuery {
    pub session: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SummaryQuery {
    pub session: String,
    pub strategy: String,
    pub fallback: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReportQuery {
    pub session: String,
    pub strategy: Option<String>,
}

fn parse_strategy(s: &str) -> Result<Strategy, Error> {
    s.parse()
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(serde_json::json!({"status": "ok"})) }))
        .route("/courses", post(register_course))
        .route("/sessions/open", post(open_session))
        .route("/sessions/{id}/close", post(close_session))
        .route("/ingest", post(ingest))
        .route("/usage", post(log_usage))
        .route("/summary", get(summary))
        .route("/class-view", get(class_view))
        .route("/volatility-report", get(volatility_report))
        .route("/summary-report", get(summary_report))
        .with_state(service)
}

type Svc = State<Arc<Service>>;

async fn register_course(State(svc): Svc, bytes: Bytes) -> Result<(StatusCode, Json<super::Course>), ApiError> {
    let req: RegisterCourseRequest = body(&bytes, Error::InvalidRequest)?;
    let course = blocking(move || svc.register_course(&req.course_code, &req.title)).await?;
    Ok((StatusCode::CREATED, course))
}

async fn open_session(State(svc): Svc, headers: HeaderMap, bytes: Bytes) -> ApiResult<super::Session> {
    let passcode = header(&headers, PASSCODE_HEADER)?;
    let req: OpenSessionRequest = if bytes.is_empty() { OpenSessionRequest::default() } else { body(&bytes, Error::InvalidRequest)? };
    blocking(move || svc.open_session(&passcode, req.recording_start_ms)).await
}

async fn close_session(State(svc): Svc, Path(id): Path<String>, headers: HeaderMap, bytes: Bytes) -> ApiResult<super::Session> {
    let passcode = header(&headers, PASSCODE_HEADER)?;
    let req: CloseSessionRequest = body(&bytes, Error::InvalidRequest)?;
    blocking(move || svc.close_session(&passcode, &id, req.recording_end_ms, &req.recording_uri)).await
}

async fn ingest(State(svc): Svc, bytes: Bytes) -> ApiResult<super::IngestAck> {
    let batch: IngestBatch = body(&bytes, Error::MalformedBatch)?;
    blocking(move || svc.ingest(&batch)).await
}

async fn log_usage(State(svc): Svc, headers: HeaderMap, bytes: Bytes) -> ApiResult<crate::summarizer::UsageEvent> {
    let passcode = header(&headers, PASSCODE_HEADER)?;
    let token = header(&headers, STUDENT_TOKEN_HEADER)?;
    let req: UsageRequest = body(&bytes, Error::InvalidRequest)?;
    blocking(move || svc.log_usage(&passcode, &token, &req.session, req.start_s, req.end_s, req.strategy)).await
}

async fn summary(State(svc): Svc, headers: HeaderMap, Query(q): Query<SummaryQuery>) -> ApiResult<super::StudentSummary> {
    let passcode = header(&headers, PASSCODE_HEADER)?;
    let token = header(&headers, STUDENT_TOKEN_HEADER)?;
    let strategy = parse_strategy(&q.strategy)?;
    blocking(move || svc.student_summary(&passcode, &token, &q.session, strategy, q.fallback.unwrap_or(true))).await
}

async fn class_view(State(svc): Svc, headers: HeaderMap, Query(q): Query<SessionQuery>) -> ApiResult<super::ProfessorView> {
    let passcode = header(&headers, PASSCODE_HEADER)?;
    blocking(move || svc.professor_view(&passcode, &q.session)).await
}

async fn volatility_report(
    State(svc): Svc,
    headers: HeaderMap,
    Query(q): Query<SessionQuery>,
) -> ApiResult<crate::analytics::VolatilityReport> {
    let passcode = header(&headers, PASSCODE_HEADER)?;
    blocking(move || svc.professor_volatility(&passcode, &q.session)).await
}

async fn summary_report(State(svc): Svc, headers: HeaderMap, Query(q): Query<ReportQuery>) -> ApiResult<crate::report::SummaryReport> {
    let passcode = header(&headers, PASSCODE_HEADER)?;
    let strategy = parse_strategy(q.strategy.as_deref().unwrap_or("all_i_missed"))?;
    blocking(move || svc.professor_summary_report(&passcode, &q.session, strategy)).await
}

/// A server running on a background task.
pub struct RunningServer {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    handle: JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.handle.await.map_err(std::io::Error::other)?
    }
}

/// Binds `addr` (port 0 picks a free one) and serves in the background.
pub async fn spawn(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<RunningServer> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(service);
    let handle = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(RunningServer { addr, shutdown: Some(tx), handle })
}

/// Serves until ctrl-c.
pub async fn serve(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
