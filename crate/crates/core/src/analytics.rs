//! Volatility statistics over attention traces and the anonymised
//! class-attention matrix shown to the professor.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::aggregation::{minute_aggregates, minute_count, MINUTE_S};
use crate::attention::AttentionTrace;
use crate::error::{Error, Result};

/// Levels are floored here before taking logs; no-face seconds are exactly 0.
pub const DEFAULT_VOLATILITY_FLOOR: f64 = 0.01;

/// Population standard deviation.
pub fn stdev(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: series.len() });
    }
    // Shifting by the first value keeps a constant series exactly at zero.
    let shift = series[0];
    let n = series.len() as f64;
    let mean = series.iter().map(|x| x - shift).sum::<f64>() / n;
    Ok((series.iter().map(|x| (x - shift - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Population standard deviation of `ln(x_i / x_{i-1})`, with each value
/// floored at `floor` first.
pub fn log_return_volatility(series: &[f64], floor: f64) -> Result<f64> {
    if series.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: series.len() });
    }
    if !(floor > 0.0) {
        return Err(Error::InvalidRequest("volatility floor must be positive".into()));
    }
    let returns: Vec<f64> = series.windows(2).map(|w| (w[1].max(floor) / w[0].max(floor)).ln()).collect();
    stdev(&returns)
}

/// Log-return volatility inside each minute; `None` for minutes below the
/// coverage quorum or with fewer than three samples.
pub fn minute_volatility_series(trace: &AttentionTrace, duration_s: i64, floor: f64, quorum: usize) -> Vec<Option<f64>> {
    let mut per_minute: Vec<Vec<f64>> = vec![Vec::new(); minute_count(duration_s)];
    for s in trace.samples().iter().filter(|s| s.t >= 0 && s.t < duration_s) {
        per_minute[(s.t / MINUTE_S) as usize].push(s.level);
    }
    per_minute
        .iter()
        .map(|levels| {
            if levels.len() < quorum {
                None
            } else {
                log_return_volatility(levels, floor).ok()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentVolatility {
    pub student: String,
    /// σ of the raw per-second levels.
    pub sigma_per_second: f64,
    /// σ of the covered one-minute means.
    pub sigma_minute_aggregates: f64,
    /// Covered minutes, parallel to `minute_volatility`.
    pub covered_minutes: Vec<usize>,
    /// Log-return volatility within each covered minute.
    pub minute_volatility: Vec<f64>,
    pub mean_minute_volatility: f64,
    /// Log-return volatility of the whole per-second series.
    pub log_volatility_per_second: Option<f64>,
    /// Log-return volatility of the sequence of covered minute means.
    pub log_volatility_minute_aggregates: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub student: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VolatilityReport {
    pub students: Vec<StudentVolatility>,
    pub exclusions: Vec<Exclusion>,
}

impl VolatilityReport {
    pub fn get(&self, student: &str) -> Option<&StudentVolatility> {
        self.students.iter().find(|s| s.student == student)
    }
}

pub fn student_volatility(trace: &AttentionTrace, duration_s: i64, floor: f64, quorum: usize) -> Result<StudentVolatility> {
    let levels = trace.levels();
    let sigma_per_second = stdev(&levels)?;
    let aggs = minute_aggregates(trace, duration_s, quorum);
    let minute_means: Vec<f64> = aggs.iter().filter(|a| a.covered).filter_map(|a| a.mean_level).collect();
    let sigma_minute_aggregates = stdev(&minute_means)?;
    let (covered_minutes, minute_volatility): (Vec<usize>, Vec<f64>) = minute_volatility_series(trace, duration_s, floor, quorum)
        .into_iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .unzip();
    if minute_volatility.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mean_minute_volatility = minute_volatility.iter().sum::<f64>() / minute_volatility.len() as f64;
    Ok(StudentVolatility {
        student: trace.student_ref.clone(),
        sigma_per_second,
        sigma_minute_aggregates,
        covered_minutes,
        minute_volatility,
        mean_minute_volatility,
        log_volatility_per_second: log_return_volatility(&levels, floor).ok(),
        log_volatility_minute_aggregates: log_return_volatility(&minute_means, floor).ok(),
    })
}

/// Students are reported in input order; those without enough data are
/// listed under `exclusions`.
pub fn volatility_report(traces: &[AttentionTrace], duration_s: i64, floor: f64, quorum: usize) -> VolatilityReport {
    let mut report = VolatilityReport::default();
    for trace in traces {
        match student_volatility(trace, duration_s, floor, quorum) {
            Ok(v) => report.students.push(v),
            Err(e) => report.exclusions.push(Exclusion { student: trace.student_ref.clone(), reason: e.to_string() }),
        }
    }
    report
}

/// Session-scoped labels for student tokens: keyed hash of the token under
/// the session salt, lengthened where two tokens would collide.
pub fn pseudonyms<'a>(tokens: impl IntoIterator<Item = &'a str>, salt: &[u8]) -> BTreeMap<String, String> {
    let digests: BTreeMap<String, String> = tokens
        .into_iter()
        .map(|t| {
            let mut mac = Hmac::<Sha256>::new_from_slice(salt).expect("hmac accepts any key length");
            mac.update(t.as_bytes());
            (t.to_string(), hex::encode(mac.finalize().into_bytes()))
        })
        .collect();
    let mut len = 8;
    loop {
        let labels: BTreeSet<&str> = digests.values().map(|d| &d[..len]).collect();
        if labels.len() == digests.len() || len == 64 {
            break;
        }
        len += 2;
    }
    digests.into_iter().map(|(t, d)| (t, format!("P-{}", &d[..len]))).collect()
}

/// Minute-by-participant mean attention, labelled by pseudonym only.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAttentionMatrix {
    pub session_ref: String,
    pub duration_s: i64,
    /// Pseudonyms, sorted.
    pub participants: Vec<String>,
    /// `values[minute][participant]`; `None` where the participant was not covered.
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Serialize)]
struct MatrixDocument<'a> {
    minutes: Vec<usize>,
    participants: &'a [String],
    values: &'a [Vec<Option<f64>>],
}

impl Serialize for ClassAttentionMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDocument { minutes: (0..self.values.len()).collect(), participants: &self.participants, values: &self.values }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClassAttentionMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Doc {
            minutes: Vec<usize>,
            participants: Vec<String>,
            values: Vec<Vec<Option<f64>>>,
        }
        let doc = Doc::deserialize(deserializer)?;
        if doc.minutes.len() != doc.values.len() || doc.values.iter().any(|r| r.len() != doc.participants.len()) {
            return Err(serde::de::Error::custom("matrix shape does not match minutes/participants"));
        }
        Ok(Self { session_ref: String::new(), duration_s: doc.minutes.len() as i64 * MINUTE_S, participants: doc.participants, values: doc.values })
    }
}

impl ClassAttentionMatrix {
    pub fn minute_count(&self) -> usize {
        self.values.len()
    }

    /// Sum over participants for each minute (the stacked height).
    pub fn stacked_totals(&self) -> Vec<f64> {
        self.values.iter().map(|row| row.iter().flatten().sum()).collect()
    }

    /// Covered participants per minute.
    pub fn present_counts(&self) -> Vec<usize> {
        self.values.iter().map(|row| row.iter().flatten().count()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        self.values.iter().map(|row| row[j]).collect()
    }

    /// Wide CSV: `minute,<pseudonym>,...`, empty cells where absent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("minute");
        for p in &self.participants {
            out.push(',');
            out.push_str(p);
        }
        out.push('\n');
        for (k, row) in self.values.iter().enumerate() {
            let _ = write!(out, "{k}");
            for v in row {
                out.push(',');
                if let Some(v) = v {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// One column per student with at least one sample in the session.
pub fn class_attention_matrix(
    session_ref: &str,
    traces: &[AttentionTrace],
    duration_s: i64,
    salt: &[u8],
    quorum: usize,
) -> ClassAttentionMatrix {
    let present: Vec<&AttentionTrace> = traces.iter().filter(|t| !t.is_empty()).collect();
    let labels = pseudonyms(present.iter().map(|t| t.student_ref.as_str()), salt);
    let mut columns: Vec<(String, Vec<Option<f64>>)> = present
        .iter()
        .map(|t| {
            let col = minute_aggregates(t, duration_s, quorum)
                .into_iter()
                .map(|a| if a.covered { a.mean_level } else { None })
                .collect();
            (labels[&t.student_ref].clone(), col)
        })
        .collect();
    columns.sort_by(|a, b| a.0.cmp(&b.0));
    let n = minute_count(duration_s);
    let values = (0..n).map(|k| columns.iter().map(|(_, c)| c[k]).collect()).collect();
    ClassAttentionMatrix {
        session_ref: session_ref.to_string(),
        duration_s,
        participants: columns.into_iter().map(|(p, _)| p).collect(),
        values,
    }
}
