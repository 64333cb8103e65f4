//! The baseline summary: every minute below the student's own median, plus
//! every minute without enough samples.
//!
//! Run with: cargo run --example all_i_missed

use lecture_recap::aggregation::{minute_aggregates, session_threshold, MissedSet, DEFAULT_COVERAGE_QUORUM};
use lecture_recap::attention::{AttentionSample, AttentionTrace};
use lecture_recap::summarizer::{all_i_missed, concat_playlist, render_manifest, DEFAULT_GAP_S};

fn main() -> lecture_recap::Result<()> {
    let duration_s = 12 * 60;
    // Attentive except in minutes 3-4 and 8; joins 30 s late and leaves after minute 10.
    let samples = (30..600)
        .map(|t| {
            let level = match t / 60 {
                3 | 4 => 0.25,
                8 => 0.4,
                _ => 0.8 + 0.01 * (t % 7) as f64,
            };
            AttentionSample::new(t, level, true)
        })
        .collect();
    let trace = AttentionTrace::new("student-1", "lecture-1", samples)?;

    let aggregates = minute_aggregates(&trace, duration_s, DEFAULT_COVERAGE_QUORUM);
    for a in &aggregates {
        let mean = a.mean_level.map_or("-".to_string(), |m| format!("{m:.3}"));
        println!("minute {:>2}: mean {mean:>5}, {:>2} samples, covered {}", a.minute_index, a.sample_count, a.covered);
    }
    println!("threshold (median of covered minutes): {:.3}", session_threshold(&aggregates)?);

    let missed = MissedSet::from_aggregates("lecture-1", "student-1", &aggregates);
    println!("missed minutes: {:?}", missed.minutes);

    let cuts = all_i_missed(&missed, duration_s, DEFAULT_GAP_S);
    let manifest = render_manifest(&cuts);
    for e in &manifest.entries {
        println!("[{:>4}, {:>4}) gap before: {}", e.segment.start_s, e.segment.end_s, e.leading_gap);
    }
    println!("content {} s, playback with gaps {} s", cuts.content_s(), manifest.total_playback_s);
    print!("{}", concat_playlist(&cuts, "lecture-1.mp4"));
    Ok(())
}
