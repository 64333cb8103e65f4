//! Course registration, session lifecycle, attention ingestion and the
//! summary / class-view queries behind the HTTP API.
//!
//! Two credentials exist per course. The public passcode is shared with
//! students and unlocks ingestion, usage logging and a student's own
//! summaries; the private passcode stays with the professor and unlocks the
//! session lifecycle and the anonymised class views. Students are known only
//! by an opaque client-generated token.

pub mod client;
pub mod http;
pub mod store;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock};
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::{Mutex, RwLock};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{minute_aggregates, minute_count, MinuteAggregate, MissedSet};
use crate::analytics::{class_attention_matrix, pseudonyms, volatility_report, ClassAttentionMatrix, VolatilityReport};
use crate::attention::{trim_to_session, AttentionSample, AttentionTrace};
use crate::config::{AnalysisConfig, ServiceConfig};
use crate::error::{Error, Result};
use crate::report::{SummaryReport, SummaryRow};
use crate::sim::ClassDataset;
use crate::summarizer::{
    all_i_missed, class_minute_means, fixed_granularity, full_recording, peer_informed, render_manifest, replay_heat,
    CutList, PlaybackManifest, Strategy, UsageEvent,
};
use store::{Journal, Record};

pub const MAX_BATCH_SAMPLES: usize = 600;
pub const MAX_TOKEN_LEN: usize = 128;
const PASSCODE_ALPHABET: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ23456789";
const PASSCODE_LEN: usize = 8;

pub fn now_ms() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as i64).unwrap_or(0)
}

/// Eight symbols from a 32-letter alphabet without look-alikes (40 bits).
pub fn generate_passcode(rng: &mut impl Rng) -> String {
    (0..PASSCODE_LEN).map(|_| PASSCODE_ALPHABET[rng.random_range(0..PASSCODE_ALPHABET.len())] as char).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Course {
    pub course_code: String,
    pub title: String,
    pub public_passcode: String,
    pub private_passcode: String,
    pub created_at_ms: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PasscodeClass {
    Public,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub course_code: String,
    pub recording_start_ms: i64,
    pub recording_end_ms: Option<i64>,
    pub recording_uri: Option<String>,
    pub state: SessionState,
}

impl Session {
    pub fn duration_s(&self) -> Option<i64> {
        self.recording_end_ms.map(|end| (end - self.recording_start_ms) / 1000)
    }
}

/// A session plus the server-side pseudonym salt, which never leaves the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session: Session,
    pub salt: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WireSample {
    Tuple(i64, f64, bool),
    Object { t_ms: i64, level: f64, face_detected: bool },
}

/// One reading as sent by a capture client. Accepts either
/// `{"t_ms", "level", "face_detected"}` or `[t_ms, level, face_detected]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "WireSample")]
pub struct IngestSample {
    pub t_ms: i64,
    pub level: f64,
    pub face_detected: bool,
}

impl From<WireSample> for IngestSample {
    fn from(w: WireSample) -> Self {
        match w {
            WireSample::Tuple(t_ms, level, face_detected) | WireSample::Object { t_ms, level, face_detected } => {
                IngestSample { t_ms, level, face_detected }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestBatch {
    pub public_passcode: String,
    pub student_token: String,
    pub samples: Vec<IngestSample>,
}

impl IngestBatch {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedBatch(m));
        if self.student_token.is_empty() || self.student_token.len() > MAX_TOKEN_LEN {
            return bad(format!("student_token must be 1..={MAX_TOKEN_LEN} bytes"));
        }
        if self.samples.is_empty() || self.samples.len() > MAX_BATCH_SAMPLES {
            return bad(format!("batch must hold 1..={MAX_BATCH_SAMPLES} samples, got {}", self.samples.len()));
        }
        if self.samples.windows(2).any(|w| w[1].t_ms < w[0].t_ms) {
            return bad("timestamps must be non-decreasing".into());
        }
        for s in &self.samples {
            if !s.level.is_finite() || !(0.0..=1.0).contains(&s.level) {
                return bad(format!("level {} outside [0, 1]", s.level));
            }
            if !s.face_detected && s.level != 0.0 {
                return bad("level must be 0 when no face is detected".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestAck {
    /// Samples from this batch now stored.
    pub accepted_count: usize,
    /// Samples superseded by a later one for the same second, in this batch
    /// or already stored.
    pub dropped_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentSummary {
    pub cut_list: CutList,
    pub manifest: PlaybackManifest,
    pub recording_uri: String,
    pub duration_s: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfessorView {
    pub session_id: String,
    pub course_code: String,
    pub participant_count: usize,
    pub duration_s: i64,
    #[serde(flatten)]
    pub matrix: ClassAttentionMatrix,
}

/// Everything persistent, for equality checks across restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub courses: Vec<Course>,
    pub sessions: Vec<Session>,
    pub traces: BTreeMap<String, Vec<AttentionTrace>>,
    pub usage: BTreeMap<String, Vec<UsageEvent>>,
}

type Buffer = BTreeMap<i64, (f64, bool)>;

struct ClosedData {
    duration_s: i64,
    traces: BTreeMap<String, AttentionTrace>,
}

struct SessionSlot {
    meta: RwLock<SessionRecord>,
    buffers: Mutex<HashMap<String, Arc<Mutex<Buffer>>>>,
    closed: OnceLock<ClosedData>,
    usage: Mutex<Vec<UsageEvent>>,
    cache: Mutex<HashMap<(String, Strategy, u64), CutList>>,
}

impl SessionSlot {
    fn new(record: SessionRecord) -> Self {
        Self {
            meta: RwLock::new(record),
            buffers: Mutex::new(HashMap::new()),
            closed: OnceLock::new(),
            usage: Mutex::new(Vec::new()),
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn buffer(&self, token: &str) -> Arc<Mutex<Buffer>> {
        self.buffers.lock().entry(token.to_string()).or_default().clone()
    }

    fn closed(&self) -> Result<&ClosedData> {
        self.closed.get().ok_or(Error::SessionNotClosed)
    }
}

#[derive(Default)]
struct Registry {
    courses: BTreeMap<String, Course>,
    passcodes: HashMap<String, (String, PasscodeClass)>,
    sessions: BTreeMap<String, Arc<SessionSlot>>,
    open_by_course: HashMap<String, String>,
}

pub struct Service {
    config: ServiceConfig,
    registry: RwLock<Registry>,
    journal: Option<Journal>,
}

impl Service {
    /// Opens the service, replaying the journal when a storage path is configured.
    pub fn open(config: ServiceConfig) -> Result<Self> {
        config.analysis.validate()?;
        let (journal, records) = match &config.storage_path {
            Some(dir) => {
                let (j, records) = Journal::open(dir, config.sync_writes)?;
                (Some(j), records)
            }
            None => (None, Vec::new()),
        };
        let service = Service { config, registry: RwLock::new(Registry::default()), journal: None };
        let replayed = records.len();
        for record in records {
            service.apply(record)?;
        }
        if replayed > 0 {
            tracing::debug!(records = replayed, "journal replayed");
        }
        Ok(Service { journal, ..service })
    }

    pub fn in_memory() -> Self {
        Self::open(ServiceConfig::in_memory()).expect("in-memory service cannot fail to open")
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn analysis(&self) -> &AnalysisConfig {
        &self.config.analysis
    }

    fn persist(&self, record: &Record) -> Result<()> {
        match &self.journal {
            Some(j) => j.append(record),
            None => Ok(()),
        }
    }

    /// Re-applies a journal record without writing it again.
    fn apply(&self, record: Record) -> Result<()> {
        match record {
            Record::CourseRegistered { course } => {
                let mut reg = self.registry.write();
                reg.passcodes.insert(course.public_passcode.clone(), (course.course_code.clone(), PasscodeClass::Public));
                reg.passcodes.insert(course.private_passcode.clone(), (course.course_code.clone(), PasscodeClass::Private));
                reg.courses.insert(course.course_code.clone(), course);
            }
            Record::SessionOpened { session } => {
                let mut reg = self.registry.write();
                reg.open_by_course.insert(session.session.course_code.clone(), session.session.session_id.clone());
                reg.sessions.insert(session.session.session_id.clone(), Arc::new(SessionSlot::new(session)));
            }
            Record::SamplesIngested { session_id, student_token, samples } => {
                let slot = self.slot(&session_id)?;
                let start = slot.meta.read().session.recording_start_ms;
                let buf = slot.buffer(&student_token);
                let mut buf = buf.lock();
                for (t_ms, level, face) in samples {
                    buf.insert((t_ms - start).div_euclid(1000), (level, face));
                }
            }
            Record::SessionClosed { session_id, recording_end_ms, recording_uri } => {
                let slot = self.slot(&session_id)?;
                let mut meta = slot.meta.write();
                self.finish_close(&slot, &mut meta, recording_end_ms, recording_uri);
            }
            Record::UsageLogged { event } => {
                self.slot(&event.session_ref)?.usage.lock().push(event);
            }
        }
        Ok(())
    }

    fn slot(&self, session_id: &str) -> Result<Arc<SessionSlot>> {
        self.registry.read().sessions.get(session_id).cloned().ok_or_else(|| Error::UnknownSession(session_id.to_string()))
    }

    fn resolve(&self, passcode: &str) -> Result<(String, PasscodeClass)> {
        self.registry.read().passcodes.get(passcode).cloned().ok_or(Error::UnknownPasscode)
    }

    /// Checks that `passcode` is of class `class` and belongs to the course
    /// that owns `session_id`.
    fn authorize(&self, passcode: &str, class: PasscodeClass, session_id: &str) -> Result<Arc<SessionSlot>> {
        let (course, got) = self.resolve(passcode)?;
        if got != class {
            return Err(Error::Unauthorized(format!("this operation needs the {class:?} passcode").to_lowercase()));
        }
        let slot = self.slot(session_id)?;
        if slot.meta.read().session.course_code != course {
            return Err(Error::Unauthorized("passcode is for a different course".into()));
        }
        Ok(slot)
    }

    pub fn register_course(&self, course_code: &str, title: &str) -> Result<Course> {
        let code = course_code.trim();
        if code.is_empty() {
            return Err(Error::InvalidRequest("course_code must be non-empty".into()));
        }
        let mut reg = self.registry.write();
        if reg.courses.contains_key(code) {
            return Err(Error::DuplicateCourse(code.to_string()));
        }
        let mut rng = rand::rng();
        let mut fresh = || loop {
            let p = generate_passcode(&mut rng);
            if !reg.passcodes.contains_key(&p) {
                break p;
            }
        };
        let public_passcode = fresh();
        let private_passcode = loop {
            let p = fresh();
            if p != public_passcode {
                break p;
            }
        };
        let course = Course {
            course_code: code.to_string(),
            title: title.to_string(),
            public_passcode,
            private_passcode,
            created_at_ms: now_ms(),
        };
        self.persist(&Record::CourseRegistered { course: course.clone() })?;
        reg.passcodes.insert(course.public_passcode.clone(), (code.to_string(), PasscodeClass::Public));
        reg.passcodes.insert(course.private_passcode.clone(), (code.to_string(), PasscodeClass::Private));
        reg.courses.insert(code.to_string(), course.clone());
        Ok(course)
    }

    /// Starts a session for the course owning the private `passcode`.
    /// `recording_start_ms` defaults to now.
    pub fn open_session(&self, passcode: &str, recording_start_ms: Option<i64>) -> Result<Session> {
        let (course, class) = self.resolve(passcode)?;
        if class != PasscodeClass::Private {
            return Err(Error::Unauthorized("opening a session needs the private passcode".into()));
        }
        let mut reg = self.registry.write();
        if let Some(open) = reg.open_by_course.get(&course) {
            return Err(Error::SessionAlreadyOpen(open.clone()));
        }
        let mut rng = rand::rng();
        let session_id = loop {
            let id = format!("S{}", hex::encode(rng.random::<[u8; 8]>()));
            if !reg.sessions.contains_key(&id) {
                break id;
            }
        };
        let record = SessionRecord {
            session: Session {
                session_id: session_id.clone(),
                course_code: course.clone(),
                recording_start_ms: recording_start_ms.unwrap_or_else(now_ms),
                recording_end_ms: None,
                recording_uri: None,
                state: SessionState::Open,
            },
            salt: hex::encode(rng.random::<[u8; 16]>()),
        };
        self.persist(&Record::SessionOpened { session: record.clone() })?;
        let session = record.session.clone();
        reg.open_by_course.insert(course, session_id.clone());
        reg.sessions.insert(session_id, Arc::new(SessionSlot::new(record)));
        Ok(session)
    }

    pub fn close_session(&self, passcode: &str, session_id: &str, recording_end_ms: Option<i64>, recording_uri: &str) -> Result<Session> {
        let slot = self.authorize(passcode, PasscodeClass::Private, session_id)?;
        let mut meta = slot.meta.write();
        if meta.session.state == SessionState::Closed {
            return Err(Error::SessionClosed);
        }
        let end = recording_end_ms.unwrap_or_else(now_ms);
        if end - meta.session.recording_start_ms < 1000 {
            return Err(Error::InvalidRequest("recording must end at least one second after it starts".into()));
        }
        self.persist(&Record::SessionClosed {
            session_id: session_id.to_string(),
            recording_end_ms: end,
            recording_uri: recording_uri.to_string(),
        })?;
        self.finish_close(&slot, &mut meta, end, recording_uri.to_string());
        Ok(meta.session.clone())
    }

    /// Freezes the buffered traces, trimmed to the recording.
    fn finish_close(&self, slot: &SessionSlot, meta: &mut SessionRecord, end_ms: i64, uri: String) {
        meta.session.recording_end_ms = Some(end_ms);
        meta.session.recording_uri = Some(uri);
        meta.session.state = SessionState::Closed;
        let duration_s = meta.session.duration_s().unwrap_or(0);
        let buffers = std::mem::take(&mut *slot.buffers.lock());
        let traces = buffers
            .into_iter()
            .map(|(token, buf)| {
                let samples = buf.lock().iter().map(|(&t, &(level, face))| AttentionSample::new(t, level, face)).collect::<Vec<_>>();
                let raw = AttentionTrace::from_unordered(token.clone(), meta.session.session_id.clone(), samples);
                (token, trim_to_session(&raw, 0, duration_s))
            })
            .collect();
        let _ = slot.closed.set(ClosedData { duration_s, traces });
        let mut reg = self.registry.write();
        if reg.open_by_course.get(&meta.session.course_code) == Some(&meta.session.session_id) {
            reg.open_by_course.remove(&meta.session.course_code);
        }
    }

    /// Appends a batch to the student's buffer in the course's open session.
    /// A repeated second keeps the last value received.
    pub fn ingest(&self, batch: &IngestBatch) -> Result<IngestAck> {
        let (course, class) = self.resolve(&batch.public_passcode)?;
        if class != PasscodeClass::Public {
            return Err(Error::Unauthorized("ingestion needs the public passcode".into()));
        }
        batch.validate()?;
        let session_id = self.registry.read().open_by_course.get(&course).cloned().ok_or(Error::SessionClosed)?;
        let slot = self.slot(&session_id)?;
        let meta = slot.meta.read();
        if meta.session.state != SessionState::Open {
            return Err(Error::SessionClosed);
        }
        let start = meta.session.recording_start_ms;
        let buf = slot.buffer(&batch.student_token);
        let mut buf = buf.lock();

        let mut incoming: BTreeMap<i64, (f64, bool)> = BTreeMap::new();
        let mut dropped = 0;
        for s in &batch.samples {
            if incoming.insert((s.t_ms - start).div_euclid(1000), (s.level, s.face_detected)).is_some() {
                dropped += 1;
            }
        }
        dropped += incoming.keys().filter(|k| buf.contains_key(k)).count();

        self.persist(&Record::SamplesIngested {
            session_id,
            student_token: batch.student_token.clone(),
            samples: batch.samples.iter().map(|s| (s.t_ms, s.level, s.face_detected)).collect(),
        })?;
        let accepted = incoming.len();
        buf.extend(incoming);
        Ok(IngestAck { accepted_count: accepted, dropped_count: dropped })
    }

    pub fn log_usage(
        &self,
        passcode: &str,
        student_token: &str,
        session_id: &str,
        start_s: i64,
        end_s: i64,
        strategy: Strategy,
    ) -> Result<UsageEvent> {
        let slot = self.authorize(passcode, PasscodeClass::Public, session_id)?;
        if student_token.is_empty() || student_token.len() > MAX_TOKEN_LEN {
            return Err(Error::InvalidRequest("missing student token".into()));
        }
        let duration_s = slot.closed()?.duration_s;
        if start_s < 0 || end_s <= start_s || end_s > duration_s {
            return Err(Error::OutOfRange(format!("[{start_s}, {end_s}) not within [0, {duration_s})")));
        }
        let event = UsageEvent {
            student_ref: student_token.to_string(),
            session_ref: session_id.to_string(),
            start_s,
            end_s,
            strategy_played: strategy,
            at_ms: now_ms(),
        };
        let mut usage = slot.usage.lock();
        self.persist(&Record::UsageLogged { event: event.clone() })?;
        usage.push(event.clone());
        slot.cache.lock().retain(|(_, s, _), _| *s != Strategy::ReplayHeat);
        Ok(event)
    }

    /// A student's summary, reachable with the public passcode and only for
    /// the caller's own token.
    pub fn student_summary(
        &self,
        passcode: &str,
        student_token: &str,
        session_id: &str,
        strategy: Strategy,
        fallback: bool,
    ) -> Result<StudentSummary> {
        self.authorize(passcode, PasscodeClass::Public, session_id)?;
        self.summarize(session_id, student_token, strategy, fallback)
    }

    pub fn professor_view(&self, passcode: &str, session_id: &str) -> Result<ProfessorView> {
        self.authorize(passcode, PasscodeClass::Private, session_id)?;
        self.class_view(session_id)
    }

    pub fn professor_volatility(&self, passcode: &str, session_id: &str) -> Result<VolatilityReport> {
        self.authorize(passcode, PasscodeClass::Private, session_id)?;
        self.volatility(session_id)
    }

    pub fn professor_summary_report(&self, passcode: &str, session_id: &str, strategy: Strategy) -> Result<SummaryReport> {
        self.authorize(passcode, PasscodeClass::Private, session_id)?;
        self.summary_report(session_id, strategy)
    }

    // Operator queries. The authorised methods above delegate here.

    pub fn courses(&self) -> Vec<Course> {
        self.registry.read().courses.values().cloned().collect()
    }

    pub fn course(&self, code: &str) -> Option<Course> {
        self.registry.read().courses.get(code).cloned()
    }

    pub fn sessions(&self) -> Vec<Session> {
        let slots: Vec<_> = self.registry.read().sessions.values().cloned().collect();
        slots.iter().map(|s| s.meta.read().session.clone()).collect()
    }

    pub fn session(&self, session_id: &str) -> Result<Session> {
        Ok(self.slot(session_id)?.meta.read().session.clone())
    }

    /// Seconds buffered so far for one student in an open session.
    pub fn buffered_seconds(&self, session_id: &str, student_token: &str) -> Result<usize> {
        let slot = self.slot(session_id)?;
        let buffers = slot.buffers.lock();
        Ok(buffers.get(student_token).map_or(0, |b| b.lock().len()))
    }

    /// Trimmed traces of a closed session, ordered by token.
    pub fn traces(&self, session_id: &str) -> Result<Vec<AttentionTrace>> {
        Ok(self.slot(session_id)?.closed()?.traces.values().cloned().collect())
    }

    pub fn usage(&self, session_id: &str) -> Result<Vec<UsageEvent>> {
        Ok(self.slot(session_id)?.usage.lock().clone())
    }

    fn salt(&self, slot: &SessionSlot) -> Vec<u8> {
        slot.meta.read().salt.clone().into_bytes()
    }

    pub fn summarize(&self, session_id: &str, student_token: &str, strategy: Strategy, fallback: bool) -> Result<StudentSummary> {
        let slot = self.slot(session_id)?;
        let closed = slot.closed()?;
        let uri = slot.meta.read().session.recording_uri.clone().unwrap_or_default();
        let cfg = &self.config.analysis;
        let key = (student_token.to_string(), strategy, cfg.fingerprint());

        let has_trace = closed.traces.get(student_token).is_some_and(|t| !t.is_empty());
        if !has_trace && !fallback {
            return Err(Error::UnknownStudent);
        }
        let cached = slot.cache.lock().get(&key).cloned();
        let cut_list = match cached {
            Some(c) => c,
            None => {
                let trace = match closed.traces.get(student_token) {
                    Some(t) if has_trace => t.clone(),
                    _ => AttentionTrace::empty(student_token, session_id),
                };
                let usage = slot.usage.lock().clone();
                let c = compute_cut_list(session_id, &trace, closed, &usage, strategy, cfg)?;
                slot.cache.lock().insert(key, c.clone());
                c
            }
        };
        let manifest = render_manifest(&cut_list);
        Ok(StudentSummary { cut_list, manifest, recording_uri: uri, duration_s: closed.duration_s })
    }

    pub fn class_view(&self, session_id: &str) -> Result<ProfessorView> {
        let slot = self.slot(session_id)?;
        let closed = slot.closed()?;
        let traces: Vec<AttentionTrace> = closed.traces.values().cloned().collect();
        let matrix = class_attention_matrix(session_id, &traces, closed.duration_s, &self.salt(&slot), self.config.analysis.coverage_quorum);
        let course_code = slot.meta.read().session.course_code.clone();
        Ok(ProfessorView {
            session_id: session_id.to_string(),
            course_code,
            participant_count: matrix.participants.len(),
            duration_s: closed.duration_s,
            matrix,
        })
    }

    fn pseudonymous_traces(&self, slot: &SessionSlot) -> Result<Vec<AttentionTrace>> {
        let closed = slot.closed()?;
        let present: Vec<&AttentionTrace> = closed.traces.values().filter(|t| !t.is_empty()).collect();
        let labels = pseudonyms(present.iter().map(|t| t.student_ref.as_str()), &self.salt(slot));
        let mut out: Vec<AttentionTrace> = present
            .into_iter()
            .map(|t| t.relabelled(labels[&t.student_ref].clone()))
            .collect();
        out.sort_by(|a, b| a.student_ref.cmp(&b.student_ref));
        Ok(out)
    }

    /// Non-empty traces of a closed session under their session pseudonyms.
    pub fn pseudonymised_traces(&self, session_id: &str) -> Result<Vec<AttentionTrace>> {
        let slot = self.slot(session_id)?;
        self.pseudonymous_traces(&slot)
    }

    /// Usage events with student tokens replaced by session pseudonyms.
    pub fn pseudonymised_usage(&self, session_id: &str) -> Result<Vec<UsageEvent>> {
        let slot = self.slot(session_id)?;
        let salt = self.salt(&slot);
        let closed = slot.closed()?;
        let labels = pseudonyms(closed.traces.values().filter(|t| !t.is_empty()).map(|t| t.student_ref.as_str()), &salt);
        let usage = slot.usage.lock().clone();
        Ok(usage
            .into_iter()
            .map(|u| {
                let label = labels.get(&u.student_ref).cloned().unwrap_or_else(|| {
                    pseudonyms([u.student_ref.as_str()], &salt).into_values().next().expect("one label per token")
                });
                UsageEvent { student_ref: label, ..u }
            })
            .collect())
    }

    /// Volatility per participant, labelled by session pseudonym.
    pub fn volatility(&self, session_id: &str) -> Result<VolatilityReport> {
        let slot = self.slot(session_id)?;
        let traces = self.pseudonymous_traces(&slot)?;
        let cfg = &self.config.analysis;
        Ok(volatility_report(&traces, slot.closed()?.duration_s, cfg.volatility_floor, cfg.coverage_quorum))
    }

    /// One summary row per participant, labelled by session pseudonym.
    pub fn summary_report(&self, session_id: &str, strategy: Strategy) -> Result<SummaryReport> {
        let slot = self.slot(session_id)?;
        let closed = slot.closed()?;
        let labels = pseudonyms(
            closed.traces.values().filter(|t| !t.is_empty()).map(|t| t.student_ref.as_str()),
            &self.salt(&slot),
        );
        let mut rows = Vec::new();
        for (token, label) in &labels {
            let summary = self.summarize(session_id, token, strategy, true)?;
            rows.push(SummaryRow::new(label.clone(), closed.traces[token].len(), &summary.cut_list));
        }
        rows.sort_by(|a, b| a.participant.cmp(&b.participant));
        Ok(SummaryReport { session_id: session_id.to_string(), strategy, duration_s: closed.duration_s, rows })
    }

    /// Registers the course if needed, then pushes the dataset through the
    /// normal open / ingest / close / usage path. Samples are stamped from
    /// `recording_start_ms`.
    pub fn load_dataset(&self, course_code: &str, dataset: &ClassDataset, recording_start_ms: i64, recording_uri: &str) -> Result<Session> {
        let course = match self.course(course_code) {
            Some(c) => c,
            None => self.register_course(course_code, "Simulated class")?,
        };
        let session = self.open_session(&course.private_passcode, Some(recording_start_ms))?;
        for trace in &dataset.traces {
            for batch in trace_batches(trace, recording_start_ms, &course.public_passcode, 60) {
                self.ingest(&batch)?;
            }
        }
        let session = self.close_session(
            &course.private_passcode,
            &session.session_id,
            Some(recording_start_ms + dataset.duration_s * 1000),
            recording_uri,
        )?;
        for u in &dataset.usage {
            self.log_usage(&course.public_passcode, &u.student_ref, &session.session_id, u.start_s, u.end_s, u.strategy_played)?;
        }
        Ok(session)
    }

    pub fn snapshot(&self) -> Snapshot {
        let sessions = self.sessions();
        let mut traces = BTreeMap::new();
        let mut usage = BTreeMap::new();
        for s in &sessions {
            if let Ok(t) = self.traces(&s.session_id) {
                traces.insert(s.session_id.clone(), t);
            }
            usage.insert(s.session_id.clone(), self.usage(&s.session_id).unwrap_or_default());
        }
        Snapshot { courses: self.courses(), sessions, traces, usage }
    }
}

/// Splits a trace into ingest batches of at most `per_batch` samples.
pub fn trace_batches(trace: &AttentionTrace, recording_start_ms: i64, public_passcode: &str, per_batch: usize) -> Vec<IngestBatch> {
    trace
        .samples()
        .chunks(per_batch.clamp(1, MAX_BATCH_SAMPLES))
        .map(|chunk| IngestBatch {
            public_passcode: public_passcode.to_string(),
            student_token: trace.student_ref.clone(),
            samples: chunk
                .iter()
                .map(|s| IngestSample { t_ms: recording_start_ms + s.t * 1000, level: s.level, face_detected: s.face_detected })
                .collect(),
        })
        .collect()
}

fn compute_cut_list(
    session_id: &str,
    trace: &AttentionTrace,
    closed: &ClosedData,
    usage: &[UsageEvent],
    strategy: Strategy,
    cfg: &AnalysisConfig,
) -> Result<CutList> {
    let duration = closed.duration_s;
    let token = trace.student_ref.as_str();
    let aggregates = minute_aggregates(trace, duration, cfg.coverage_quorum);
    let missed = MissedSet::from_aggregates(session_id, token, &aggregates);
    match strategy {
        Strategy::Full => Ok(full_recording(session_id, token, duration, cfg.gap_s)),
        Strategy::AllIMissed => Ok(all_i_missed(&missed, duration, cfg.gap_s)),
        Strategy::Fixed30s | Strategy::Fixed2min | Strategy::Fixed5min => {
            fixed_granularity(&aggregates, &missed, strategy.window_s().expect("fixed strategy"), duration, cfg.gap_s)
        }
        Strategy::PeerInformed => {
            let peers: Vec<Vec<MinuteAggregate>> = closed
                .traces
                .iter()
                .filter(|(t, tr)| t.as_str() != token && !tr.is_empty())
                .map(|(_, tr)| minute_aggregates(tr, duration, cfg.coverage_quorum))
                .collect();
            let class = class_minute_means(&peers, minute_count(duration), cfg.min_peers);
            peer_informed(&missed, &class, duration, cfg.gap_s)
        }
        Strategy::ReplayHeat => {
            let own: Vec<UsageEvent> = usage.iter().filter(|e| e.student_ref == token).cloned().collect();
            Ok(replay_heat(session_id, token, usage, &own, duration, cfg.replay_heat_factor, cfg.gap_s))
        }
    }
}
