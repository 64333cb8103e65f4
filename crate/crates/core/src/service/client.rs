//! Typed HTTP client for the service API, plus a driver that streams a
//! simulated class through it.

use std::time::Duration;

use reqwest::{Method, RequestBuilder};
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::http::{
    CloseSessionRequest, ErrorBody, OpenSessionRequest, RegisterCourseRequest, UsageRequest, PASSCODE_HEADER,
    STUDENT_TOKEN_HEADER,
};
use super::{trace_batches, Course, IngestAck, IngestBatch, ProfessorView, Session, StudentSummary};
use crate::analytics::VolatilityReport;
use crate::error::{Error, Result};
use crate::report::SummaryReport;
use crate::sim::ClassDataset;
use crate::summarizer::{Strategy, UsageEvent};

#[derive(Debug, Clone)]
pub struct ApiClient {
    base: String,
    http: reqwest::Client,
}

impl ApiClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self { base: base_url.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{path}", self.base))
    }

    async fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        let resp = req.send().await.map_err(|e| Error::Storage(format!("request failed: {e}")))?;
        let status = resp.status();
        let bytes = resp.bytes().await.map_err(|e| Error::Storage(format!("reading response: {e}")))?;
        if status.is_success() {
            return serde_json::from_slice(&bytes).map_err(|e| Error::Storage(format!("decoding response: {e}")));
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(b) => Err(Error::from_wire(&b.error_code, &b.message)),
            Err(_) => Err(Error::Storage(format!("HTTP {status}: {}", String::from_utf8_lossy(&bytes)))),
        }
    }

    fn json<B: Serialize>(req: RequestBuilder, body: &B) -> RequestBuilder {
        req.header("content-type", "application/json").body(serde_json::to_vec(body).expect("request bodies serialize"))
    }

    pub async fn health(&self) -> Result<serde_json::Value> {
        self.send(self.request(Method::GET, "/health")).await
    }

    pub async fn register_course(&self, course_code: &str, title: &str) -> Result<Course> {
        let body = RegisterCourseRequest { course_code: course_code.into(), title: title.into() };
        self.send(Self::json(self.request(Method::POST, "/courses"), &body)).await
    }

    pub async fn open_session(&self, passcode: &str, recording_start_ms: Option<i64>) -> Result<Session> {
        let req = self.request(Method::POST, "/sessions/open").header(PASSCODE_HEADER, passcode);
        self.send(Self::json(req, &OpenSessionRequest { recording_start_ms })).await
    }

    pub async fn close_session(&self, passcode: &str, session_id: &str, recording_end_ms: Option<i64>, recording_uri: &str) -> Result<Session> {
        let req = self.request(Method::POST, &format!("/sessions/{session_id}/close")).header(PASSCODE_HEADER, passcode);
        self.send(Self::json(req, &CloseSessionRequest { recording_end_ms, recording_uri: recording_uri.into() })).await
    }

    pub async fn ingest(&self, batch: &IngestBatch) -> Result<IngestAck> {
        self.send(Self::json(self.request(Method::POST, "/ingest"), batch)).await
    }

    pub async fn log_usage(
        &self,
        passcode: &str,
        student_token: &str,
        session_id: &str,
        start_s: i64,
        end_s: i64,
        strategy: Strategy,
    ) -> Result<UsageEvent> {
        let req = self.request(Method::POST, "/usage").header(PASSCODE_HEADER, passcode).header(STUDENT_TOKEN_HEADER, student_token);
        self.send(Self::json(req, &UsageRequest { session: session_id.into(), start_s, end_s, strategy })).await
    }

    pub async fn summary(&self, passcode: &str, student_token: &str, session_id: &str, strategy: Strategy) -> Result<StudentSummary> {
        let req = self
            .request(Method::GET, "/summary")
            .query(&[("session", session_id), ("strategy", strategy.as_str())])
            .header(PASSCODE_HEADER, passcode)
            .header(STUDENT_TOKEN_HEADER, student_token);
        self.send(req).await
    }

    pub async fn class_view(&self, passcode: &str, session_id: &str) -> Result<ProfessorView> {
        let req = self.request(Method::GET, "/class-view").query(&[("session", session_id)]).header(PASSCODE_HEADER, passcode);
        let mut view: ProfessorView = self.send(req).await?;
        view.matrix.session_ref = view.session_id.clone();
        view.matrix.duration_s = view.duration_s;
        Ok(view)
    }

    pub async fn volatility_report(&self, passcode: &str, session_id: &str) -> Result<VolatilityReport> {
        let req = self.request(Method::GET, "/volatility-report").query(&[("session", session_id)]).header(PASSCODE_HEADER, passcode);
        self.send(req).await
    }

    pub async fn summary_report(&self, passcode: &str, session_id: &str, strategy: Strategy) -> Result<SummaryReport> {
        let req = self
            .request(Method::GET, "/summary-report")
            .query(&[("session", session_id), ("strategy", strategy.as_str())])
            .header(PASSCODE_HEADER, passcode);
        self.send(req).await
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayStats {
    pub batches: usize,
    pub accepted: usize,
    pub dropped: usize,
}

/// Streams every student's trace to an open session concurrently, one
/// minute per batch. `speedup` compresses the pacing between batches;
/// `None` sends as fast as the server accepts.
pub async fn replay_dataset(
    client: &ApiClient,
    public_passcode: &str,
    dataset: &ClassDataset,
    recording_start_ms: i64,
    speedup: Option<f64>,
) -> Result<ReplayStats> {
    let pause = speedup.filter(|s| *s > 0.0 && s.is_finite()).map(|s| Duration::from_secs_f64(60.0 / s));
    let mut tasks = tokio::task::JoinSet::new();
    for trace in &dataset.traces {
        let batches = trace_batches(trace, recording_start_ms, public_passcode, 60);
        let client = client.clone();
        tasks.spawn(async move {
            let mut stats = ReplayStats::default();
            for (i, batch) in batches.iter().enumerate() {
                if i > 0 {
                    if let Some(p) = pause {
                        tokio::time::sleep(p).await;
                    }
                }
                let ack = client.ingest(batch).await?;
                stats.batches += 1;
                stats.accepted += ack.accepted_count;
                stats.dropped += ack.dropped_count;
            }
            Ok::<_, Error>(stats)
        });
    }
    let mut total = ReplayStats::default();
    while let Some(joined) = tasks.join_next().await {
        let s = joined.map_err(|e| Error::Storage(format!("replay task failed: {e}")))??;
        total.batches += s.batches;
        total.accepted += s.accepted;
        total.dropped += s.dropped;
    }
    Ok(total)
}
