//! Summaries that use the rest of the class: minutes the student missed while
//! classmates were engaged, and minutes classmates replayed that this student
//! never watched.
//!
//! Run with: cargo run --example peer_and_replay

use lecture_recap::aggregation::{minute_aggregates, minute_count, MissedSet, DEFAULT_COVERAGE_QUORUM};
use lecture_recap::sim::{simulate_class, ProfileDistribution};
use lecture_recap::summarizer::{
    all_i_missed, class_minute_means, peer_informed, replay_counts, replay_heat, Strategy, UsageEvent, DEFAULT_GAP_S,
    DEFAULT_MIN_PEERS, DEFAULT_REPLAY_HEAT_FACTOR,
};

fn main() -> lecture_recap::Result<()> {
    let duration_s = 30 * 60;
    let dist = ProfileDistribution { togglers: 2, ..ProfileDistribution::default() };
    let class = simulate_class(8, duration_s, &dist, 21)?;
    let me = &class.traces[0];
    let session = class.session_ref.as_str();

    let mine = minute_aggregates(me, duration_s, DEFAULT_COVERAGE_QUORUM);
    let missed = MissedSet::from_aggregates(session, &me.student_ref, &mine);
    let peers: Vec<_> = class.traces[1..].iter().map(|t| minute_aggregates(t, duration_s, DEFAULT_COVERAGE_QUORUM)).collect();
    let class_means = class_minute_means(&peers, minute_count(duration_s), DEFAULT_MIN_PEERS);

    let baseline = all_i_missed(&missed, duration_s, DEFAULT_GAP_S);
    let peer = peer_informed(&missed, &class_means, duration_s, DEFAULT_GAP_S)?;
    println!("all_i_missed  minutes {:?}", baseline.minutes());
    println!("peer_informed minutes {:?}", peer.minutes());

    // Three classmates replay minutes 12 and 13 twice each; one rewatches the opening.
    let play = |who: &str, start_s, end_s| UsageEvent {
        student_ref: who.into(),
        session_ref: session.into(),
        start_s,
        end_s,
        strategy_played: Strategy::AllIMissed,
        at_ms: 0,
    };
    let mut usage = Vec::new();
    for who in ["b", "c", "d"] {
        usage.push(play(who, 720, 840));
        usage.push(play(who, 720, 840));
    }
    usage.push(play("e", 0, 120));
    let counts = replay_counts(&usage, duration_s);
    println!("plays at 12:30 = {}, at 01:00 = {}", counts[750], counts[60]);

    let heat = replay_heat(session, &me.student_ref, &usage, &[], duration_s, DEFAULT_REPLAY_HEAT_FACTOR, DEFAULT_GAP_S);
    println!("replay_heat   minutes {:?}", heat.minutes());
    Ok(())
}
