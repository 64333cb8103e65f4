//! The professor's anonymised view: one column per participant, one row per
//! minute, written as JSON, wide CSV and a stacked SVG bar chart.
//!
//! Run with: cargo run --example class_chart -- [out-dir]

use std::path::PathBuf;

use lecture_recap::aggregation::DEFAULT_COVERAGE_QUORUM;
use lecture_recap::analytics::class_attention_matrix;
use lecture_recap::report::class_chart_svg;
use lecture_recap::sim::{simulate_class, ProfileDistribution};

fn main() -> lecture_recap::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/class-chart".into()));
    std::fs::create_dir_all(&out)?;

    let duration_s = 48 * 60;
    let dist = ProfileDistribution { partial_attendees: 3, ..ProfileDistribution::default() };
    let class = simulate_class(12, duration_s, &dist, 2020)?;
    let matrix = class_attention_matrix(&class.session_ref, &class.traces, duration_s, b"per-session salt", DEFAULT_COVERAGE_QUORUM);

    println!("{} participants: {}", matrix.participants.len(), matrix.participants.join(" "));
    for (k, (total, present)) in matrix.stacked_totals().iter().zip(matrix.present_counts()).enumerate().step_by(6) {
        println!("minute {k:>2}: stacked {total:5.2} from {present} participants");
    }

    std::fs::write(out.join("class.json"), serde_json::to_string_pretty(&matrix).unwrap())?;
    std::fs::write(out.join("class.csv"), matrix.to_csv())?;
    std::fs::write(out.join("class.svg"), class_chart_svg(&matrix))?;
    println!("wrote {}", out.display());
    Ok(())
}
