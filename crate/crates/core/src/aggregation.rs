//! One-minute aggregation and the per-session "missed minute" decision.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::attention::AttentionTrace;
use crate::error::{Error, Result};

pub const MINUTE_S: i64 = 60;
/// Samples a minute needs before its mean is trusted.
pub const DEFAULT_COVERAGE_QUORUM: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteAggregate {
    pub minute_index: usize,
    pub mean_level: Option<f64>,
    pub sample_count: usize,
    pub covered: bool,
}

pub fn minute_count(duration_s: i64) -> usize {
    if duration_s <= 0 {
        0
    } else {
        ((duration_s + MINUTE_S - 1) / MINUTE_S) as usize
    }
}

/// Seconds `[start, end)` spanned by minute `k` of a session.
pub fn minute_bounds(k: usize, duration_s: i64) -> (i64, i64) {
    let start = k as i64 * MINUTE_S;
    (start, (start + MINUTE_S).min(duration_s))
}

/// Buckets a trimmed trace into `ceil(duration / 60)` minutes.
pub fn minute_aggregates(trace: &AttentionTrace, duration_s: i64, quorum: usize) -> Vec<MinuteAggregate> {
    let n = minute_count(duration_s);
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for s in trace.samples() {
        if s.t < 0 || s.t >= duration_s {
            continue;
        }
        let k = (s.t / MINUTE_S) as usize;
        sums[k] += s.level;
        counts[k] += 1;
    }
    (0..n)
        .map(|k| MinuteAggregate {
            minute_index: k,
            mean_level: (counts[k] > 0).then(|| sums[k] / counts[k] as f64),
            sample_count: counts[k],
            covered: counts[k] >= quorum,
        })
        .collect()
}

/// Median with the even-count midpoint convention. `None` for empty input.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 0 { (sorted[mid - 1] + sorted[mid]) / 2.0 } else { sorted[mid] })
}

/// Median of the covered minutes' means for one student in one session.
pub fn session_threshold(aggregates: &[MinuteAggregate]) -> Result<f64> {
    let covered: Vec<f64> = aggregates.iter().filter(|a| a.covered).filter_map(|a| a.mean_level).collect();
    median(&covered).ok_or(Error::NoCoveredMinutes)
}

/// A minute is missed when it is uncovered or its mean is strictly below
/// `threshold`.
pub fn missed_minutes(aggregates: &[MinuteAggregate], threshold: f64) -> BTreeSet<usize> {
    aggregates
        .iter()
        .filter(|a| !a.covered || a.mean_level.is_some_and(|m| m < threshold))
        .map(|a| a.minute_index)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissedSet {
    pub session_ref: String,
    pub student_ref: String,
    pub minutes: BTreeSet<usize>,
    /// `None` when the student had no covered minute and the whole session
    /// counts as missed.
    pub threshold_used: Option<f64>,
}

impl MissedSet {
    pub fn from_aggregates(session_ref: &str, student_ref: &str, aggregates: &[MinuteAggregate]) -> Self {
        let threshold = session_threshold(aggregates).ok();
        let minutes = match threshold {
            Some(t) => missed_minutes(aggregates, t),
            None => aggregates.iter().map(|a| a.minute_index).collect(),
        };
        Self { session_ref: session_ref.into(), student_ref: student_ref.into(), minutes, threshold_used: threshold }
    }

    pub fn for_trace(trace: &AttentionTrace, duration_s: i64, quorum: usize) -> Self {
        let aggs = minute_aggregates(trace, duration_s, quorum);
        Self::from_aggregates(&trace.session_ref, &trace.student_ref, &aggs)
    }
}

pub const AGGREGATE_CSV_HEADER: &str = "minute_index,mean_level,sample_count,covered";

pub fn aggregates_to_csv(aggregates: &[MinuteAggregate]) -> String {
    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for a in aggregates {
        let mean = a.mean_level.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", a.minute_index, mean, a.sample_count, a.covered);
    }
    out
}
