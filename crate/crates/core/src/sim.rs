//! Seeded synthetic classrooms.
//!
//! A [`StudentProfile`] fixes one student's base attention, noise, attendance
//! windows and "note-taking" minutes where the level flips high/low every
//! second. The same profile and seed always produce the same trace.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::aggregation::MINUTE_S;
use crate::attention::{AttentionSample, AttentionTrace, SampleSource};
use crate::error::{Error, Result};
use crate::summarizer::{Strategy, UsageEvent};

/// Half the peak-to-peak swing of a note-taking minute.
pub const TOGGLE_AMPLITUDE: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub base_level: f64,
    pub noise_sigma: f64,
    /// Sorted, disjoint `[start_s, end_s)` windows where the student is logging.
    pub attendance: Vec<(i64, i64)>,
    #[serde(default, alias = "toggle_spans")]
    pub toggle_minutes: Vec<usize>,
    pub seed: u64,
}

impl StudentProfile {
    pub fn present_throughout(base_level: f64, noise_sigma: f64, duration_s: i64, seed: u64) -> Self {
        Self { base_level, noise_sigma, attendance: vec![(0, duration_s)], toggle_minutes: Vec::new(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.base_level) {
            return Err(Error::InvalidRequest(format!("base_level {} outside [0, 1]", self.base_level)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidRequest("noise_sigma must be finite and non-negative".into()));
        }
        if self.attendance.iter().any(|(a, b)| b <= a || *a < 0) {
            return Err(Error::InvalidRequest("attendance windows must be non-empty and non-negative".into()));
        }
        if self.attendance.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::InvalidRequest("attendance windows must be sorted and disjoint".into()));
        }
        Ok(())
    }

    pub fn is_present(&self, t: i64) -> bool {
        self.attendance.iter().any(|&(a, b)| t >= a && t < b)
    }
}

/// Per-second samples inside the attendance windows, clipped to `[0, duration_s)`.
pub fn generate_trace(profile: &StudentProfile, duration_s: i64, student_ref: &str, session_ref: &str) -> Result<AttentionTrace> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let noise = Normal::new(0.0, profile.noise_sigma).map_err(|e| Error::InvalidRequest(e.to_string()))?;
    let mut samples = Vec::new();
    for &(start, end) in &profile.attendance {
        for t in start.max(0)..end.min(duration_s) {
            let jitter = noise.sample(&mut rng);
            let minute = (t / MINUTE_S) as usize;
            let level = if profile.toggle_minutes.contains(&minute) {
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                profile.base_level + sign * TOGGLE_AMPLITUDE
            } else {
                profile.base_level + jitter
            };
            samples.push(AttentionSample::new(t, level.clamp(0.0, 1.0), true).with_source(SampleSource::Simulated));
        }
    }
    AttentionTrace::new(student_ref, session_ref, samples)
}

/// Ranges that random profiles are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDistribution {
    pub base_range: (f64, f64),
    pub noise_range: (f64, f64),
    /// The last `partial_attendees` students log only part of the session.
    pub partial_attendees: usize,
    /// The first `togglers` students get note-taking minutes.
    pub togglers: usize,
    pub toggle_minutes_per_student: usize,
    pub replays_per_student: usize,
}

impl Default for ProfileDistribution {
    fn default() -> Self {
        Self {
            base_range: (0.35, 0.75),
            noise_range: (0.03, 0.08),
            partial_attendees: 0,
            togglers: 0,
            toggle_minutes_per_student: 10,
            replays_per_student: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStudent {
    pub token: String,
    pub profile: StudentProfile,
}

/// A reproducible multi-student session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDataset {
    pub session_ref: String,
    pub duration_s: i64,
    pub students: Vec<SimStudent>,
    pub traces: Vec<AttentionTrace>,
    pub usage: Vec<UsageEvent>,
}

impl ClassDataset {
    pub fn trace(&self, token: &str) -> Option<&AttentionTrace> {
        self.traces.iter().find(|t| t.student_ref == token)
    }

    pub fn to_scenario(&self, seed: u64) -> Scenario {
        Scenario {
            duration_s: self.duration_s,
            seed,
            students: self.students.iter().map(|s| ScenarioStudent { token: Some(s.token.clone()), profile: s.profile.clone() }).collect(),
            usage: self
                .usage
                .iter()
                .map(|u| ScenarioUsage { token: u.student_ref.clone(), start_s: u.start_s, end_s: u.end_s })
                .collect(),
        }
    }
}

fn token(rng: &mut impl Rng) -> String {
    hex::encode(rng.random::<[u8; 16]>())
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Draws `n_students` profiles from `dist` and generates their traces.
pub fn simulate_class(n_students: usize, duration_s: i64, dist: &ProfileDistribution, seed: u64) -> Result<ClassDataset> {
    if n_students == 0 {
        return Err(Error::InvalidRequest("need at least one student".into()));
    }
    if duration_s <= 0 {
        return Err(Error::InvalidRequest("duration must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_minutes = ((duration_s + MINUTE_S - 1) / MINUTE_S) as usize;
    let session_ref = format!("sim-{seed}");
    let mut students = Vec::with_capacity(n_students);
    for i in 0..n_students {
        let base = uniform(&mut rng, dist.base_range);
        let sigma = uniform(&mut rng, dist.noise_range);
        let attendance = if i + dist.partial_attendees >= n_students {
            partial_windows(&mut rng, duration_s)
        } else {
            vec![(0, duration_s)]
        };
        let mut toggle_minutes = Vec::new();
        if i < dist.togglers {
            let mut all: Vec<usize> = (0..n_minutes).collect();
            for _ in 0..dist.toggle_minutes_per_student.min(n_minutes) {
                let pick = rng.random_range(0..all.len());
                toggle_minutes.push(all.swap_remove(pick));
            }
            toggle_minutes.sort_unstable();
        }
        let profile = StudentProfile {
            base_level: base,
            noise_sigma: sigma,
            attendance,
            toggle_minutes,
            seed: rng.random(),
        };
        students.push(SimStudent { token: token(&mut rng), profile });
    }

    let mut usage = Vec::new();
    for s in &students {
        for _ in 0..dist.replays_per_student {
            let start = rng.random_range(0..n_minutes) as i64 * MINUTE_S;
            let len = rng.random_range(1..=5) * MINUTE_S;
            usage.push(UsageEvent {
                student_ref: s.token.clone(),
                session_ref: session_ref.clone(),
                start_s: start,
                end_s: (start + len).min(duration_s),
                strategy_played: Strategy::Full,
                at_ms: 0,
            });
        }
    }
    build_dataset(session_ref, duration_s, students, usage)
}

/// Late arrival and early departure, sometimes with a break in between;
/// between a quarter and a half of the session in total.
fn partial_windows(rng: &mut impl Rng, duration_s: i64) -> Vec<(i64, i64)> {
    let span = (duration_s as f64 * rng.random_range(0.25..0.5)) as i64;
    let span = span.max(MINUTE_S.min(duration_s));
    let start = rng.random_range(0..=(duration_s - span));
    if rng.random_bool(0.5) && span >= 4 * MINUTE_S {
        let first = span / 2;
        let pause = rng.random_range(MINUTE_S..=2 * MINUTE_S).min(duration_s - start - span);
        let second_start = start + first + pause.max(0);
        return vec![(start, start + first), (second_start, second_start + span - first)];
    }
    vec![(start, start + span)]
}

fn build_dataset(session_ref: String, duration_s: i64, students: Vec<SimStudent>, usage: Vec<UsageEvent>) -> Result<ClassDataset> {
    let traces = students
        .iter()
        .map(|s| generate_trace(&s.profile, duration_s, &s.token, &session_ref))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassDataset { session_ref, duration_s, students, traces, usage })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStudent {
    #[serde(default)]
    pub token: Option<String>,
    #[serde(flatten)]
    pub profile: StudentProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioUsage {
    pub token: String,
    pub start_s: i64,
    pub end_s: i64,
}

/// Hand-written class description, loaded from JSON or TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub duration_s: i64,
    pub seed: u64,
    pub students: Vec<ScenarioStudent>,
    #[serde(default)]
    pub usage: Vec<ScenarioUsage>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| Error::InvalidRequest(format!("scenario: {e}"))),
            _ => serde_json::from_str(&text).map_err(|e| Error::InvalidRequest(format!("scenario: {e}"))),
        }
    }

    pub fn to_dataset(&self) -> Result<ClassDataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let session_ref = format!("sim-{}", self.seed);
        let students: Vec<SimStudent> = self
            .students
            .iter()
            .map(|s| SimStudent { token: s.token.clone().unwrap_or_else(|| token(&mut rng)), profile: s.profile.clone() })
            .collect();
        let usage = self
            .usage
            .iter()
            .map(|u| UsageEvent {
                student_ref: u.token.clone(),
                session_ref: session_ref.clone(),
                start_s: u.start_s,
                end_s: u.end_s,
                strategy_played: Strategy::Full,
                at_ms: 0,
            })
            .collect();
        build_dataset(session_ref, self.duration_s, students, usage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{minute_volatility_series, stdev, DEFAULT_VOLATILITY_FLOOR};

    #[test]
    fn noiseless_full_attendance() {
        let p = StudentProfile::present_throughout(0.5, 0.0, 120, 1);
        let t = generate_trace(&p, 120, "s", "x").unwrap();
        assert_eq!(t.len(), 120);
        assert!(t.samples().iter().all(|s| s.level == 0.5 && s.face_detected));
    }

    #[test]
    fn samples_only_inside_windows() {
        let p = StudentProfile { base_level: 0.5, noise_sigma: 0.1, attendance: vec![(60, 120)], toggle_minutes: vec![], seed: 3 };
        let t = generate_trace(&p, 300, "s", "x").unwrap();
        assert_eq!(t.len(), 60);
        assert!(t.samples().iter().all(|s| (60..120).contains(&s.t)));
    }

    #[test]
    fn same_seed_same_trace() {
        let p = StudentProfile::present_throughout(0.4, 0.2, 600, 99);
        let a = generate_trace(&p, 600, "s", "x").unwrap();
        let b = generate_trace(&p, 600, "s", "x").unwrap();
        assert_eq!(a, b);
        let bits = |t: &AttentionTrace| t.levels().iter().map(|l| l.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = generate_trace(&StudentProfile { seed: 100, ..p }, 600, "s", "x").unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn levels_clamped() {
        let p = StudentProfile::present_throughout(0.9, 0.5, 1200, 5);
        let t = generate_trace(&p, 1200, "s", "x").unwrap();
        assert!(t.samples().iter().all(|s| (0.0..=1.0).contains(&s.level)));
        assert!(t.samples().iter().any(|s| s.level == 1.0));
    }

    #[test]
    fn noise_matches_sigma() {
        let p = StudentProfile::present_throughout(0.5, 0.08, 1800, 11);
        let t = generate_trace(&p, 1800, "s", "x").unwrap();
        let sd = stdev(&t.levels()).unwrap();
        assert!((sd - 0.08).abs() < 0.008, "sd {sd}");
    }

    #[test]
    fn toggle_minutes_are_volatile() {
        let p = StudentProfile { base_level: 0.5, noise_sigma: 0.02, attendance: vec![(0, 600)], toggle_minutes: vec![3], seed: 2 };
        let t = generate_trace(&p, 600, "s", "x").unwrap();
        let vol = minute_volatility_series(&t, 600, DEFAULT_VOLATILITY_FLOOR, 30);
        // 59 returns of ±ln(0.9/0.1), one more + than −
        let expected = (0.9f64 / 0.1).ln() * (1.0 - 1.0 / 59f64.powi(2)).sqrt();
        assert!((vol[3].unwrap() - expected).abs() < 1e-9);
        for (k, v) in vol.iter().enumerate().filter(|(k, _)| *k != 3) {
            assert!(v.unwrap() < vol[3].unwrap(), "minute {k}");
        }
    }

    #[test]
    fn invalid_profiles_rejected() {
        let bad = StudentProfile { base_level: 0.5, noise_sigma: 0.1, attendance: vec![(100, 200), (150, 300)], toggle_minutes: vec![], seed: 0 };
        assert!(generate_trace(&bad, 600, "s", "x").is_err());
        let bad = StudentProfile { base_level: 1.5, ..StudentProfile::present_throughout(0.5, 0.1, 60, 0) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn class_is_reproducible() {
        let dist = ProfileDistribution { partial_attendees: 3, togglers: 1, replays_per_student: 2, ..Default::default() };
        let a = simulate_class(9, 2700, &dist, 7).unwrap();
        let b = simulate_class(9, 2700, &dist, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.traces.len(), 9);
        assert_eq!(a.usage.len(), 18);
        for s in &a.students[..6] {
            assert_eq!(s.profile.attendance, vec![(0, 2700)]);
        }
        for s in &a.students[6..] {
            let present: i64 = s.profile.attendance.iter().map(|(x, y)| y - x).sum();
            assert!(present < 2700 / 2 + 60, "{present}");
        }
        assert!(!a.students[0].profile.toggle_minutes.is_empty());
        assert_ne!(a, simulate_class(9, 2700, &dist, 8).unwrap());
    }

    #[test]
    fn scenario_round_trip() {
        let ds = simulate_class(3, 600, &ProfileDistribution { replays_per_student: 1, ..Default::default() }, 4).unwrap();
        let scenario = ds.to_scenario(4);
        let json = serde_json::to_string(&scenario).unwrap();
        let back: Scenario = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_dataset().unwrap(), ds);

        let toml_text = toml::to_string(&scenario).unwrap();
        let back: Scenario = toml::from_str(&toml_text).unwrap();
        assert_eq!(back.to_dataset().unwrap(), ds);
    }
}
