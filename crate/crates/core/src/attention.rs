//! Eye-aspect-ratio attention estimation.
//!
//! Landmark frames (six points per eye) are reduced to a scalar EAR, normalised
//! against the student's own baseline into a level in `[0, 1]`, and collapsed to
//! one [`AttentionSample`] per wall-clock second.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eye widths below this are treated as degenerate.
pub const MIN_EYE_WIDTH: f64 = 1e-9;
/// Open-eye EAR used until a student has a baseline of their own.
pub const DEFAULT_EAR_MEAN: f64 = 0.30;
pub const DEFAULT_EAR_SIGMA: f64 = 0.05;
/// Frames needed before a student's own baseline replaces the default.
pub const COLD_START_FRAMES: u64 = 300;

pub type Point = [f64; 2];

/// Six landmarks around one eye, `p1..p6` in the usual order: `p1`/`p4` are
/// the corners, `p2`/`p3` the upper lid and `p6`/`p5` the lower lid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeLandmarks {
    points: [Point; 6],
}

impl EyeLandmarks {
    pub fn new(points: [Point; 6]) -> Result<Self> {
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidLandmarks("non-finite coordinate".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point; 6] {
        &self.points
    }

    /// Applies `f` to every point. Used for similarity-transform checks.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<Self> {
        Self::new(self.points.map(f))
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `(|p2-p6| + |p3-p5|) / (2 |p1-p4|)`.
pub fn compute_ear(eye: &EyeLandmarks) -> Result<f64> {
    let [p1, p2, p3, p4, p5, p6] = eye.points;
    let width = dist(p1, p4);
    if width < MIN_EYE_WIDTH {
        return Err(Error::DegenerateWidth { width });
    }
    Ok((dist(p2, p6) + dist(p3, p5)) / (2.0 * width))
}

/// One capture frame. A frame with neither eye is a no-face frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    pub t_ms: i64,
    pub left: Option<EyeLandmarks>,
    pub right: Option<EyeLandmarks>,
}

impl LandmarkFrame {
    pub fn no_face(t_ms: i64) -> Self {
        Self { t_ms, left: None, right: None }
    }

    pub fn is_no_face(&self) -> bool {
        self.left.is_none() && self.right.is_none()
    }

    /// Mean EAR over the valid eyes, `None` if no eye yields a usable EAR.
    pub fn ear(&self) -> Option<f64> {
        let ears: Vec<f64> = [self.left.as_ref(), self.right.as_ref()]
            .into_iter()
            .flatten()
            .filter_map(|eye| compute_ear(eye).ok())
            .collect();
        if ears.is_empty() {
            None
        } else {
            Some(ears.iter().sum::<f64>() / ears.len() as f64)
        }
    }
}

/// Per-student open-eye EAR statistics (population variance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentBaseline {
    pub student_ref: String,
    pub ear_mean: f64,
    pub ear_variance: f64,
    pub frames_observed: u64,
}

impl StudentBaseline {
    /// A baseline with no observations, carrying the default statistics.
    pub fn cold(student_ref: impl Into<String>) -> Self {
        Self {
            student_ref: student_ref.into(),
            ear_mean: DEFAULT_EAR_MEAN,
            ear_variance: DEFAULT_EAR_SIGMA * DEFAULT_EAR_SIGMA,
            frames_observed: 0,
        }
    }

    /// The baseline to score frames against: this one once it has seen
    /// [`COLD_START_FRAMES`] frames, the default otherwise.
    pub fn for_scoring(&self) -> StudentBaseline {
        if self.frames_observed >= COLD_START_FRAMES && self.ear_mean > 0.0 {
            self.clone()
        } else {
            StudentBaseline { frames_observed: self.frames_observed, ..Self::cold(self.student_ref.clone()) }
        }
    }

    fn low_and_open(&self) -> (f64, f64) {
        let sigma = self.ear_variance.max(0.0).sqrt();
        ((self.ear_mean - 2.0 * sigma).max(0.0), self.ear_mean)
    }
}

/// Merges new EAR observations into a baseline using the pairwise
/// mean/variance combination, so splitting the input in any way gives the
/// same result up to rounding.
pub fn update_baseline(baseline: &StudentBaseline, observations: &[f64]) -> StudentBaseline {
    if observations.is_empty() {
        return baseline.clone();
    }
    let n_new = observations.len() as f64;
    let mean_new = observations.iter().sum::<f64>() / n_new;
    let m2_new: f64 = observations.iter().map(|x| (x - mean_new).powi(2)).sum();

    if baseline.frames_observed == 0 {
        return StudentBaseline {
            student_ref: baseline.student_ref.clone(),
            ear_mean: mean_new,
            ear_variance: m2_new / n_new,
            frames_observed: observations.len() as u64,
        };
    }

    let n_old = baseline.frames_observed as f64;
    let m2_old = baseline.ear_variance * n_old;
    let n = n_old + n_new;
    let delta = mean_new - baseline.ear_mean;
    let mean = baseline.ear_mean + delta * n_new / n;
    let m2 = m2_old + m2_new + delta * delta * n_old * n_new / n;
    StudentBaseline {
        student_ref: baseline.student_ref.clone(),
        ear_mean: mean,
        ear_variance: (m2 / n).max(0.0),
        frames_observed: baseline.frames_observed + observations.len() as u64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameAttention {
    pub attention: f64,
    pub face_detected: bool,
}

impl FrameAttention {
    pub const NO_FACE: FrameAttention = FrameAttention { attention: 0.0, face_detected: false };
}

/// Linear clamp of the frame's EAR between `mean - 2σ` (level 0) and `mean`
/// (level 1). Frames without a usable eye score as no-face.
pub fn frame_attention(frame: &LandmarkFrame, baseline: &StudentBaseline) -> FrameAttention {
    let Some(ear) = frame.ear() else {
        return FrameAttention::NO_FACE;
    };
    FrameAttention { attention: attention_from_ear(ear, baseline), face_detected: true }
}

pub fn attention_from_ear(ear: f64, baseline: &StudentBaseline) -> f64 {
    let (low, open) = baseline.low_and_open();
    let span = open - low;
    if span <= 0.0 {
        return if ear >= open { 1.0 } else { 0.0 };
    }
    ((ear - low) / span).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    #[default]
    LiveCapture,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionSample {
    /// Whole seconds from recording start.
    pub t: i64,
    pub level: f64,
    pub face_detected: bool,
    #[serde(default)]
    pub source: SampleSource,
}

impl AttentionSample {
    pub fn new(t: i64, level: f64, face_detected: bool) -> Self {
        let level = if face_detected { level.clamp(0.0, 1.0) } else { 0.0 };
        Self { t, level, face_detected, source: SampleSource::LiveCapture }
    }

    pub fn with_source(mut self, source: SampleSource) -> Self {
        self.source = source;
        self
    }
}

/// Reduces all frames captured during second `t` to one sample. A face is
/// present when at least half the frames saw one; the level averages only the
/// face frames. Returns `None` for an empty second.
pub fn second_attention(t: i64, frames: &[FrameAttention]) -> Option<AttentionSample> {
    if frames.is_empty() {
        return None;
    }
    let faces: Vec<f64> = frames.iter().filter(|f| f.face_detected).map(|f| f.attention).collect();
    let face_detected = 2 * faces.len() >= frames.len();
    let level = if face_detected { faces.iter().sum::<f64>() / faces.len() as f64 } else { 0.0 };
    Some(AttentionSample::new(t, level, face_detected))
}

/// A student's per-second samples for one session, strictly increasing in `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionTrace {
    pub student_ref: String,
    pub session_ref: String,
    samples: Vec<AttentionSample>,
}

impl AttentionTrace {
    pub fn new(
        student_ref: impl Into<String>,
        session_ref: impl Into<String>,
        samples: Vec<AttentionSample>,
    ) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidRequest("trace samples must be strictly increasing in t".into()));
        }
        if let Some(s) = samples.iter().find(|s| !(0.0..=1.0).contains(&s.level) || (!s.face_detected && s.level != 0.0)) {
            return Err(Error::InvalidRequest(format!("invalid sample at t={}", s.t)));
        }
        Ok(Self { student_ref: student_ref.into(), session_ref: session_ref.into(), samples })
    }

    /// Builds a trace from samples in any order; for a repeated second the
    /// later sample in the input wins.
    pub fn from_unordered(
        student_ref: impl Into<String>,
        session_ref: impl Into<String>,
        samples: impl IntoIterator<Item = AttentionSample>,
    ) -> Self {
        let by_t: BTreeMap<i64, AttentionSample> = samples
            .into_iter()
            .map(|s| (s.t, AttentionSample::new(s.t, s.level, s.face_detected).with_source(s.source)))
            .collect();
        Self {
            student_ref: student_ref.into(),
            session_ref: session_ref.into(),
            samples: by_t.into_values().collect(),
        }
    }

    pub fn empty(student_ref: impl Into<String>, session_ref: impl Into<String>) -> Self {
        Self { student_ref: student_ref.into(), session_ref: session_ref.into(), samples: Vec::new() }
    }

    /// Same samples under a different student label.
    pub fn relabelled(&self, student_ref: impl Into<String>) -> Self {
        Self { student_ref: student_ref.into(), ..self.clone() }
    }

    pub fn samples(&self) -> &[AttentionSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn levels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.level).collect()
    }
}

/// Keeps samples with `start <= t < end` and rebases them so `start` becomes
/// second 0. `start` and `end` are in the trace's own time base, so trimming
/// a result again with `(0, end - start)` is the identity.
pub fn trim_to_session(trace: &AttentionTrace, start: i64, end: i64) -> AttentionTrace {
    let samples = trace
        .samples
        .iter()
        .filter(|s| s.t >= start && s.t < end)
        .map(|s| AttentionSample { t: s.t - start, ..*s })
        .collect();
    AttentionTrace { student_ref: trace.student_ref.clone(), session_ref: trace.session_ref.clone(), samples }
}

/// Scores frames against the baseline and groups them into seconds relative
/// to `recording_start_ms`.
pub fn frames_to_trace(
    frames: &[LandmarkFrame],
    baseline: &StudentBaseline,
    recording_start_ms: i64,
    student_ref: &str,
    session_ref: &str,
) -> AttentionTrace {
    let scoring = baseline.for_scoring();
    let mut per_second: BTreeMap<i64, Vec<FrameAttention>> = BTreeMap::new();
    for frame in frames {
        let second = (frame.t_ms - recording_start_ms).div_euclid(1000);
        per_second.entry(second).or_default().push(frame_attention(frame, &scoring));
    }
    let samples = per_second.iter().filter_map(|(&t, fs)| second_attention(t, fs)).collect();
    AttentionTrace { student_ref: student_ref.to_string(), session_ref: session_ref.to_string(), samples }
}

/// Parses newline-delimited landmark records:
///
/// ```text
/// t_ms, L, x1,y1, x2,y2, x3,y3, x4,y4, x5,y5, x6,y6
/// t_ms, R, ...
/// t_ms, NOFACE
/// ```
///
/// Consecutive records with the same `t_ms` form one frame. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_landmark_records(text: &str) -> Result<Vec<LandmarkFrame>> {
    let mut frames: Vec<LandmarkFrame> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::InvalidLandmarks(format!("line {}: {msg}", lineno + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let t_ms: i64 = fields[0].parse().map_err(|_| bad("bad timestamp"))?;
        if frames.last().map_or(true, |f| f.t_ms != t_ms) {
            frames.push(LandmarkFrame::no_face(t_ms));
        }
        let frame = frames.last_mut().expect("pushed above");
        let tag = fields.get(1).copied().ok_or_else(|| bad("missing eye tag"))?;
        if tag.eq_ignore_ascii_case("NOFACE") {
            if fields.len() != 2 {
                return Err(bad("NOFACE takes no coordinates"));
            }
            continue;
        }
        if fields.len() != 14 {
            return Err(bad("expected 6 points (12 coordinates)"));
        }
        let mut coords = [0.0; 12];
        for (c, raw) in coords.iter_mut().zip(&fields[2..]) {
            *c = raw.parse().map_err(|_| bad("bad coordinate"))?;
        }
        let points = std::array::from_fn(|i| [coords[2 * i], coords[2 * i + 1]]);
        let eye = EyeLandmarks::new(points).map_err(|e| bad(&e.to_string()))?;
        match tag.to_ascii_uppercase().as_str() {
            "L" | "LEFT" => frame.left = Some(eye),
            "R" | "RIGHT" => frame.right = Some(eye),
            _ => return Err(bad("eye tag must be L, R or NOFACE")),
        }
    }
    Ok(frames)
}

pub fn format_landmark_records(frames: &[LandmarkFrame]) -> String {
    let mut out = String::new();
    for frame in frames {
        if frame.is_no_face() {
            let _ = writeln!(out, "{}, NOFACE", frame.t_ms);
            continue;
        }
        for (tag, eye) in [("L", &frame.left), ("R", &frame.right)] {
            if let Some(eye) = eye {
                let _ = write!(out, "{}, {tag}", frame.t_ms);
                for p in eye.points() {
                    let _ = write!(out, ", {},{}", p[0], p[1]);
                }
                out.push('\n');
            }
        }
    }
    out
}

pub const TRACE_CSV_HEADER: &str = "t_seconds,level,face_detected";

pub fn trace_to_csv(trace: &AttentionTrace) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for s in &trace.samples {
        let _ = writeln!(out, "{},{},{}", s.t, s.level, s.face_detected);
    }
    out
}

pub fn trace_from_csv(text: &str, student_ref: &str, session_ref: &str) -> Result<AttentionTrace> {
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("t_seconds")) {
            continue;
        }
        let bad = || Error::InvalidRequest(format!("trace csv line {}", lineno + 1));
        let mut fields = line.split(',').map(str::trim);
        let t = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let level = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let face = match fields.next().ok_or_else(bad)? {
            "true" | "1" => true,
            "false" | "0" => false,
            _ => return Err(bad()),
        };
        samples.push(AttentionSample::new(t, level, face));
    }
    AttentionTrace::new(student_ref, session_ref, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn open_eye() -> EyeLandmarks {
        EyeLandmarks::new([[0.0, 0.0], [0.5, 0.5], [1.5, 0.5], [2.0, 0.0], [1.5, -0.5], [0.5, -0.5]]).unwrap()
    }

    fn eye_with_ear(ear: f64) -> EyeLandmarks {
        // width 2, both heights 2*ear
        EyeLandmarks::new([[0.0, 0.0], [0.5, ear], [1.5, ear], [2.0, 0.0], [1.5, -ear], [0.5, -ear]]).unwrap()
    }

    fn baseline(mean: f64, var: f64) -> StudentBaseline {
        StudentBaseline { student_ref: "s".into(), ear_mean: mean, ear_variance: var, frames_observed: 1000 }
    }

    #[test]
    fn ear_of_reference_eye() {
        assert!((compute_ear(&open_eye()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_eye_has_zero_ear() {
        let eye = EyeLandmarks::new([[0.0, 0.0], [0.5, 0.0], [1.5, 0.0], [2.0, 0.0], [1.5, 0.0], [0.5, 0.0]]).unwrap();
        assert_eq!(compute_ear(&eye).unwrap(), 0.0);
        let eye = EyeLandmarks::new([[0.0, 0.0], [0.5, 0.3], [1.5, 0.2], [2.0, 0.0], [1.5, 0.2], [0.5, 0.3]]).unwrap();
        assert_eq!(compute_ear(&eye).unwrap(), 0.0);
    }

    #[test]
    fn zero_width_is_an_error() {
        let eye = EyeLandmarks::new([[1.0, 1.0], [0.5, 0.5], [1.5, 0.5], [1.0, 1.0], [1.5, -0.5], [0.5, -0.5]]).unwrap();
        assert!(matches!(compute_ear(&eye), Err(Error::DegenerateWidth { .. })));
    }

    #[test]
    fn non_finite_points_rejected() {
        assert!(EyeLandmarks::new([[f64::NAN, 0.0], [0.0; 2], [0.0; 2], [1.0, 0.0], [0.0; 2], [0.0; 2]]).is_err());
    }

    #[test]
    fn no_face_frame_scores_zero() {
        let fa = frame_attention(&LandmarkFrame::no_face(0), &baseline(0.3, 0.0025));
        assert_eq!(fa, FrameAttention::NO_FACE);
    }

    #[test]
    fn ear_at_mean_scores_one() {
        for var in [0.0, 0.0025, 0.04] {
            let frame = LandmarkFrame { t_ms: 0, left: Some(eye_with_ear(0.3)), right: Some(eye_with_ear(0.3)) };
            let fa = frame_attention(&frame, &baseline(0.3, var));
            assert!(fa.face_detected);
            assert!((fa.attention - 1.0).abs() < 1e-12, "var {var}: {}", fa.attention);
        }
    }

    #[test]
    fn midpoint_ear_scores_half() {
        // low = 0.30 - 2*0.05 = 0.20, open = 0.30
        let frame = LandmarkFrame { t_ms: 0, left: Some(eye_with_ear(0.25)), right: None };
        let fa = frame_attention(&frame, &baseline(0.30, 0.0025));
        assert!((fa.attention - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eyes_are_averaged_and_degenerate_eye_ignored() {
        let frame = LandmarkFrame { t_ms: 0, left: Some(eye_with_ear(0.2)), right: Some(eye_with_ear(0.3)) };
        assert!((frame.ear().unwrap() - 0.25).abs() < 1e-12);

        let flat = EyeLandmarks::new([[1.0, 1.0]; 6]).unwrap();
        let frame = LandmarkFrame { t_ms: 0, left: Some(flat), right: Some(eye_with_ear(0.3)) };
        assert!((frame.ear().unwrap() - 0.3).abs() < 1e-12);

        let frame = LandmarkFrame { t_ms: 0, left: Some(flat), right: None };
        assert_eq!(frame_attention(&frame, &baseline(0.3, 0.0025)), FrameAttention::NO_FACE);
    }

    #[test]
    fn second_reduction() {
        let f = |a, face| FrameAttention { attention: a, face_detected: face };
        let s = second_attention(4, &[f(1.0, true), f(0.0, true)]).unwrap();
        assert_eq!((s.t, s.level, s.face_detected), (4, 0.5, true));

        let s = second_attention(4, &[f(0.8, true), f(0.0, false), f(0.0, false)]).unwrap();
        assert_eq!((s.level, s.face_detected), (0.0, false));

        let s = second_attention(0, &[f(0.7, true)]).unwrap();
        assert_eq!(s.level, 0.7);

        // exactly half present counts as a face
        let s = second_attention(0, &[f(0.6, true), f(0.0, false)]).unwrap();
        assert_eq!((s.level, s.face_detected), (0.6, true));

        assert!(second_attention(0, &[]).is_none());
    }

    #[test]
    fn baseline_updates() {
        let cold = StudentBaseline::cold("s");
        let b = update_baseline(&cold, &[0.3, 0.3, 0.3]);
        assert!((b.ear_mean - 0.3).abs() < 1e-12);
        assert!(b.ear_variance.abs() < 1e-15);
        assert_eq!(b.frames_observed, 3);

        let b = update_baseline(&cold, &[0.2, 0.4]);
        assert!((b.ear_mean - 0.3).abs() < 1e-12);
        assert!((b.ear_variance - 0.01).abs() < 1e-12);

        let warm = StudentBaseline { student_ref: "s".into(), ear_mean: 0.3, ear_variance: 0.001, frames_observed: 100 };
        assert_eq!(update_baseline(&warm, &[]), warm);
    }

    #[test]
    fn cold_start_uses_default_until_enough_frames() {
        let own = StudentBaseline { student_ref: "s".into(), ear_mean: 0.25, ear_variance: 0.0001, frames_observed: 299 };
        let scoring = own.for_scoring();
        assert_eq!((scoring.ear_mean, scoring.ear_variance), (DEFAULT_EAR_MEAN, DEFAULT_EAR_SIGMA.powi(2)));
        let own = StudentBaseline { frames_observed: 300, ..own };
        assert_eq!(own.for_scoring(), own);
    }

    #[test]
    fn trim_filters_and_rebases() {
        let trace = AttentionTrace::new(
            "s",
            "x",
            vec![AttentionSample::new(-10, 0.1, true), AttentionSample::new(5, 0.2, true), AttentionSample::new(3000, 0.3, true)],
        )
        .unwrap();
        let trimmed = trim_to_session(&trace, 0, 2700);
        assert_eq!(trimmed.samples().iter().map(|s| s.t).collect::<Vec<_>>(), vec![5]);
        assert_eq!(trim_to_session(&trimmed, 0, 2700), trimmed);

        let shifted = trim_to_session(&trace, -10, 10);
        assert_eq!(shifted.samples().iter().map(|s| s.t).collect::<Vec<_>>(), vec![0, 15]);

        assert!(trim_to_session(&trace, 4000, 5000).is_empty());
    }

    #[test]
    fn landmark_records_round_trip() {
        let text = "\
# capture
1000, L, 0,0, 0.5,0.5, 1.5,0.5, 2,0, 1.5,-0.5, 0.5,-0.5
1000, R, 0,0, 0.5,0.5, 1.5,0.5, 2,0, 1.5,-0.5, 0.5,-0.5
1033, NOFACE
1066, R, 0,0, 0.5,0.25, 1.5,0.25, 2,0, 1.5,-0.25, 0.5,-0.25
";
        let frames = parse_landmark_records(text).unwrap();
        assert_eq!(frames.len(), 3);
        assert!(frames[0].left.is_some() && frames[0].right.is_some());
        assert!(frames[1].is_no_face());
        assert!((frames[2].ear().unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(parse_landmark_records(&format_landmark_records(&frames)).unwrap(), frames);
    }

    #[test]
    fn landmark_parse_errors() {
        assert!(parse_landmark_records("abc, NOFACE").is_err());
        assert!(parse_landmark_records("1, L, 0,0, 1,1").is_err());
        assert!(parse_landmark_records("1, X, 0,0,0,0,0,0,0,0,0,0,0,0").is_err());
        assert!(parse_landmark_records("1, NOFACE, 3").is_err());
    }

    #[test]
    fn frames_group_into_seconds() {
        let open = |t| LandmarkFrame { t_ms: t, left: Some(eye_with_ear(0.3)), right: Some(eye_with_ear(0.3)) };
        let frames = vec![open(10_000), open(10_500), LandmarkFrame::no_face(11_100), open(12_000)];
        let trace = frames_to_trace(&frames, &StudentBaseline::cold("s"), 10_000, "s", "x");
        let got: Vec<_> = trace.samples().iter().map(|s| (s.t, s.level, s.face_detected)).collect();
        assert_eq!(got, vec![(0, 1.0, true), (1, 0.0, false), (2, 1.0, true)]);
    }

    #[test]
    fn trace_csv_round_trip() {
        let trace = AttentionTrace::new("s", "x", vec![AttentionSample::new(0, 0.25, true), AttentionSample::new(2, 0.0, false)]).unwrap();
        let csv = trace_to_csv(&trace);
        assert_eq!(csv, "t_seconds,level,face_detected\n0,0.25,true\n2,0,false\n");
        assert_eq!(trace_from_csv(&csv, "s", "x").unwrap(), trace);
    }

    #[test]
    fn from_unordered_keeps_last_duplicate() {
        let t = AttentionTrace::from_unordered("s", "x", vec![
            AttentionSample::new(3, 0.2, true),
            AttentionSample::new(1, 0.9, true),
            AttentionSample::new(3, 0.6, true),
        ]);
        assert_eq!(t.levels(), vec![0.9, 0.6]);
    }

    fn arb_eye() -> impl Strategy<Value = EyeLandmarks> {
        (prop::array::uniform6((-5.0..5.0f64, -5.0..5.0f64)))
            .prop_map(|pts| EyeLandmarks::new(pts.map(|(x, y)| [x, y])).unwrap())
            .prop_filter("non-degenerate width", |e| dist(e.points()[0], e.points()[3]) > 1e-3)
    }

    proptest! {
        #[test]
        fn ear_invariant_under_similarity(
            eye in arb_eye(),
            angle in 0.0..std::f64::consts::TAU,
            scale in 0.1..10.0f64,
            dx in -100.0..100.0f64,
            dy in -100.0..100.0f64,
        ) {
            let (s, c) = angle.sin_cos();
            let moved = eye.map(|[x, y]| [scale * (c * x - s * y) + dx, scale * (s * x + c * y) + dy]).unwrap();
            let a = compute_ear(&eye).unwrap();
            let b = compute_ear(&moved).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a.max(1.0), "{a} vs {b}");
        }

        #[test]
        fn attention_bounded_and_monotone(
            mean in 0.05..0.6f64, sigma in 0.0..0.2f64, e1 in 0.0..1.0f64, e2 in 0.0..1.0f64,
        ) {
            let b = baseline(mean, sigma * sigma);
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let a_lo = attention_from_ear(lo, &b);
            let a_hi = attention_from_ear(hi, &b);
            prop_assert!((0.0..=1.0).contains(&a_lo) && (0.0..=1.0).contains(&a_hi));
            prop_assert!(a_lo <= a_hi);
        }

        #[test]
        fn baseline_merge_is_split_invariant(
            xs in prop::collection::vec(0.0..0.6f64, 1..200),
            cut in 0usize..200,
        ) {
            let cut = cut.min(xs.len());
            let cold = StudentBaseline::cold("s");
            let whole = update_baseline(&cold, &xs);
            let parts = update_baseline(&update_baseline(&cold, &xs[..cut]), &xs[cut..]);
            prop_assert_eq!(whole.frames_observed, parts.frames_observed);
            prop_assert!((whole.ear_mean - parts.ear_mean).abs() <= 1e-9 * whole.ear_mean.abs().max(1e-12));
            prop_assert!((whole.ear_variance - parts.ear_variance).abs() <= 1e-9 * whole.ear_variance.max(1e-6));
        }

        #[test]
        fn trim_is_idempotent_and_in_range(
            ts in prop::collection::btree_set(-500i64..5000, 0..200),
            start in -100i64..100,
            len in 1i64..3000,
        ) {
            let trace = AttentionTrace::new("s", "x", ts.iter().map(|&t| AttentionSample::new(t, 0.5, true)).collect()).unwrap();
            let once = trim_to_session(&trace, start, start + len);
            prop_assert!(once.samples().iter().all(|s| s.t >= 0 && s.t < len));
            prop_assert_eq!(trim_to_session(&once, 0, len), once);
        }
    }
}
