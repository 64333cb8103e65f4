//! Coarser summaries built from 30 s, 2 min and 5 min windows, compared with
//! the one-minute baseline.
//!
//! Run with: cargo run --example fixed_granularity

use lecture_recap::aggregation::{minute_aggregates, MissedSet, DEFAULT_COVERAGE_QUORUM};
use lecture_recap::report::SummaryRow;
use lecture_recap::sim::{generate_trace, StudentProfile};
use lecture_recap::summarizer::{all_i_missed, fixed_granularity, Strategy, DEFAULT_GAP_S};

fn main() -> lecture_recap::Result<()> {
    let duration_s = 53 * 60;
    let profile = StudentProfile { toggle_minutes: vec![5, 6, 20, 33, 34, 35, 47], ..StudentProfile::present_throughout(0.6, 0.15, duration_s, 11) };
    let trace = generate_trace(&profile, duration_s, "student-1", "lecture-1")?;
    let aggregates = minute_aggregates(&trace, duration_s, DEFAULT_COVERAGE_QUORUM);
    let missed = MissedSet::from_aggregates("lecture-1", "student-1", &aggregates);

    println!("{:<14} {:>9} {:>12}  segments (minutes)", "strategy", "segments", "content (s)");
    let baseline = all_i_missed(&missed, duration_s, DEFAULT_GAP_S);
    let mut rows = vec![(Strategy::AllIMissed, baseline)];
    for strategy in [Strategy::Fixed30s, Strategy::Fixed2min, Strategy::Fixed5min] {
        let window = strategy.window_s().expect("fixed strategies have a window");
        rows.push((strategy, fixed_granularity(&aggregates, &missed, window, duration_s, DEFAULT_GAP_S)?));
    }
    for (strategy, cuts) in rows {
        let row = SummaryRow::new(strategy.to_string(), trace.len(), &cuts);
        println!("{:<14} {:>9} {:>12}  {}", strategy, row.segment_count, row.content_s, row.segment_spans());
        // Every strategy still touches every missed minute.
        assert!(missed.minutes.iter().all(|m| cuts.segments().iter().any(|s| s.overlaps(*m as i64 * 60, (*m as i64 + 1) * 60))));
    }
    Ok(())
}
