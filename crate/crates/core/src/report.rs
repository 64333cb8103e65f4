//! Tabular and chart renderings of summaries, volatility and class attention.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::aggregation::MINUTE_S;
use crate::analytics::{ClassAttentionMatrix, VolatilityReport};
use crate::summarizer::{CutList, Segment, Strategy};

/// One participant's summary: which minutes, how many pieces, how long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub participant: String,
    pub seconds_logged: usize,
    pub segments: Vec<Segment>,
    pub segment_count: usize,
    pub content_s: i64,
    pub total_playback_s: i64,
}

impl SummaryRow {
    pub fn new(participant: String, seconds_logged: usize, cuts: &CutList) -> Self {
        Self {
            participant,
            seconds_logged,
            segments: cuts.segments().to_vec(),
            segment_count: cuts.segments().len(),
            content_s: cuts.content_s(),
            total_playback_s: crate::summarizer::render_manifest(cuts).total_playback_s,
        }
    }

    /// Segments as `start-end` in minutes, end exclusive, e.g. `0-9 10-13`.
    pub fn segment_spans(&self) -> String {
        self.segments
            .iter()
            .map(|s| format!("{}-{}", minute_label(s.start_s), minute_label(s.end_s)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub session_id: String,
    pub strategy: Strategy,
    pub duration_s: i64,
    pub rows: Vec<SummaryRow>,
}

fn minute_label(s: i64) -> String {
    if s % MINUTE_S == 0 {
        (s / MINUTE_S).to_string()
    } else {
        format!("{:.1}", s as f64 / MINUTE_S as f64)
    }
}

fn minutes(s: i64) -> String {
    minute_label(s)
}

impl SummaryReport {
    pub fn to_pretty(&self) -> String {
        let header = ["Student", "Summary segments (minutes)", "No. Segments", "Duration (min)"];
        let rows: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| [r.participant.clone(), r.segment_spans(), r.segment_count.to_string(), minutes(r.content_s)])
            .collect();
        render_table(&header, &rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("student,segments,segment_count,duration_min,total_playback_s\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.participant, r.segment_spans(), r.segment_count, minutes(r.content_s), r.total_playback_s);
        }
        out
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

/// Per-student σ columns plus mean 1-minute volatility.
pub fn volatility_csv(report: &VolatilityReport) -> String {
    let mut out = String::from(
        "student,sigma_per_second,sigma_minute,mean_minute_volatility,covered_minutes,log_vol_per_second,log_vol_minute\n",
    );
    for s in &report.students {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{},{},{}",
            s.student,
            s.sigma_per_second,
            s.sigma_minute_aggregates,
            s.mean_minute_volatility,
            s.covered_minutes.len(),
            s.log_volatility_per_second.map(|v| format!("{v:.6}")).unwrap_or_default(),
            s.log_volatility_minute_aggregates.map(|v| format!("{v:.6}")).unwrap_or_default(),
        );
    }
    out
}

pub fn volatility_pretty(report: &VolatilityReport) -> String {
    let header = ["Student", "σ (per-second)", "σ (1-minute)", "1-minute volatility"];
    let rows: Vec<[String; 4]> = report
        .students
        .iter()
        .map(|s| {
            [
                s.student.clone(),
                format!("{:.3}", s.sigma_per_second),
                format!("{:.3}", s.sigma_minute_aggregates),
                format!("{:.3}", s.mean_minute_volatility),
            ]
        })
        .collect();
    let mut out = render_table(&header, &rows);
    for e in &report.exclusions {
        let _ = writeln!(out, "excluded {}: {}", e.student, e.reason);
    }
    out
}

/// Per-minute volatility, one column per student (blank when uncovered).
pub fn minute_volatility_csv(report: &VolatilityReport, minute_count: usize) -> String {
    let mut out = String::from("minute");
    for s in &report.students {
        out.push(',');
        out.push_str(&s.student);
    }
    out.push('\n');
    for k in 0..minute_count {
        let _ = write!(out, "{k}");
        for s in &report.students {
            let v = s.covered_minutes.iter().position(|&m| m == k).map(|i| s.minute_volatility[i]);
            out.push(',');
            if v.is_some() {
                out.push_str(&opt(v));
            }
        }
        out.push('\n');
    }
    out
}

fn render_table<const N: usize>(header: &[&str; N], rows: &[[String; N]]) -> String {
    let mut widths: [usize; N] = header.map(|h| h.chars().count());
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = cells
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(&mut header.iter().copied());
    out.push_str(&line(&mut widths.map(|w| "-".repeat(w)).iter().map(String::as_str)));
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    out
}

const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#1f77b4",
    "#17becf",
];

/// Stacked bar chart, one bar per minute, one colour per participant.
pub fn class_chart_svg(matrix: &ClassAttentionMatrix) -> String {
    let (w, h, pad) = (800.0, 400.0, 40.0);
    let n = matrix.minute_count().max(1) as f64;
    let max_total = matrix.stacked_totals().into_iter().fold(1.0_f64, f64::max);
    let bar_w = (w - 2.0 * pad) / n;
    let scale = (h - 2.0 * pad) / max_total;

    let mut svg = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    svg.push('\n');
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (k, row) in matrix.values.iter().enumerate() {
        let x = pad + k as f64 * bar_w;
        let mut y = h - pad;
        for (j, v) in row.iter().enumerate() {
            let Some(v) = v else { continue };
            let bh = v * scale;
            y -= bh;
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{bh:.2}" fill="{}"><title>minute {k}, {}: {v:.3}</title></rect>"#,
                (bar_w - 1.0).max(0.5),
                PALETTE[j % PALETTE.len()],
                matrix.participants[j],
            );
        }
    }
    let _ = writeln!(svg, r#"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#, h - pad, w - pad);
    let _ = writeln!(svg, r#"<text x="{pad}" y="{}" font-size="12">minute</text>"#, h - pad / 3.0);
    for (j, p) in matrix.participants.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.0}" y="{:.0}" font-size="10" fill="{}">{p}</text>"#,
            w - pad - 70.0,
            pad / 2.0 + 12.0 * j as f64,
            PALETTE[j % PALETTE.len()],
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cuts(segs: &[(i64, i64)]) -> CutList {
        CutList::new("s", "t", Strategy::AllIMissed, 3, segs.iter().map(|&(a, b)| Segment::new(a, b)).collect(), None).unwrap()
    }

    #[test]
    fn spans_in_minutes() {
        let row = SummaryRow::new("P-1".into(), 100, &cuts(&[(0, 540), (600, 780), (2820, 2850)]));
        assert_eq!(row.segment_spans(), "0-9 10-13 47-47.5");
        assert_eq!(row.segment_count, 3);
        assert_eq!(row.total_playback_s, 540 + 180 + 30 + 6);
    }

    #[test]
    fn pretty_table_aligns() {
        let report = SummaryReport {
            session_id: "s".into(),
            strategy: Strategy::AllIMissed,
            duration_s: 600,
            rows: vec![SummaryRow::new("P-abc".into(), 1, &cuts(&[(60, 120)]))],
        };
        let text = report.to_pretty();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Student  Summary segments (minutes)"));
        assert!(lines[2].starts_with("P-abc    1-2"));
    }

    #[test]
    fn chart_has_one_rect_per_present_cell() {
        let m = ClassAttentionMatrix {
            session_ref: "s".into(),
            duration_s: 120,
            participants: vec!["P-a".into(), "P-b".into()],
            values: vec![vec![Some(0.5), None], vec![Some(0.2), Some(0.4)]],
        };
        let svg = class_chart_svg(&m);
        assert_eq!(svg.matches("<title>").count(), 3);
    }
}
