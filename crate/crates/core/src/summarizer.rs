//! Cut-list generation for personalised summaries, and playback manifests.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregation::{median, minute_bounds, minute_count, MinuteAggregate, MissedSet, MINUTE_S};
use crate::error::{Error, Result};

pub const DEFAULT_GAP_S: i64 = 3;
pub const DEFAULT_REPLAY_HEAT_FACTOR: f64 = 2.0;
/// Covered classmates a minute needs before it can be compared against the class.
pub const DEFAULT_MIN_PEERS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Full,
    AllIMissed,
    #[serde(rename = "fixed_30s")]
    Fixed30s,
    #[serde(rename = "fixed_2min")]
    Fixed2min,
    #[serde(rename = "fixed_5min")]
    Fixed5min,
    PeerInformed,
    ReplayHeat,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Full,
        Strategy::AllIMissed,
        Strategy::Fixed5min,
        Strategy::Fixed2min,
        Strategy::Fixed30s,
        Strategy::PeerInformed,
        Strategy::ReplayHeat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::AllIMissed => "all_i_missed",
            Strategy::Fixed30s => "fixed_30s",
            Strategy::Fixed2min => "fixed_2min",
            Strategy::Fixed5min => "fixed_5min",
            Strategy::PeerInformed => "peer_informed",
            Strategy::ReplayHeat => "replay_heat",
        }
    }

    pub fn window_s(self) -> Option<i64> {
        match self {
            Strategy::Fixed30s => Some(30),
            Strategy::Fixed2min => Some(120),
            Strategy::Fixed5min => Some(300),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match norm.as_str() {
            "full" => Strategy::Full,
            "all_i_missed" | "missed" => Strategy::AllIMissed,
            "fixed_30s" | "30s" => Strategy::Fixed30s,
            "fixed_2min" | "2min" => Strategy::Fixed2min,
            "fixed_5min" | "5min" => Strategy::Fixed5min,
            "peer_informed" | "peer" => Strategy::PeerInformed,
            "replay_heat" | "replay" => Strategy::ReplayHeat,
            _ => return Err(Error::UnknownStrategy(s.to_string())),
        })
    }
}

/// A half-open span `[start_s, end_s)` of the recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: i64,
    pub end_s: i64,
}

impl Segment {
    pub fn new(start_s: i64, end_s: i64) -> Self {
        debug_assert!(start_s < end_s);
        Self { start_s, end_s }
    }

    pub fn len(&self) -> i64 {
        self.end_s - self.start_s
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0
    }

    pub fn overlaps(&self, start: i64, end: i64) -> bool {
        self.start_s < end && start < self.end_s
    }
}

/// Sorted, disjoint, non-touching segments of one session's recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CutListDocument", try_from = "CutListDocument")]
pub struct CutList {
    pub session: String,
    pub student: String,
    pub strategy: Strategy,
    pub gap_s: i64,
    segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
struct CutListDocument {
    session: String,
    student: String,
    strategy: Strategy,
    gap_s: i64,
    segments: Vec<Segment>,
    total_playback_s: i64,
}

impl From<CutList> for CutListDocument {
    fn from(c: CutList) -> Self {
        let total_playback_s = render_manifest(&c).total_playback_s;
        Self { session: c.session, student: c.student, strategy: c.strategy, gap_s: c.gap_s, segments: c.segments, total_playback_s }
    }
}

impl TryFrom<CutListDocument> for CutList {
    type Error = Error;

    fn try_from(d: CutListDocument) -> Result<Self> {
        CutList::new(d.session, d.student, d.strategy, d.gap_s, d.segments, None)
    }
}

impl CutList {
    /// Validates ordering and bounds. `duration_s`, when given, bounds the
    /// last segment.
    pub fn new(
        session: impl Into<String>,
        student: impl Into<String>,
        strategy: Strategy,
        gap_s: i64,
        segments: Vec<Segment>,
        duration_s: Option<i64>,
    ) -> Result<Self> {
        if gap_s < 0 {
            return Err(Error::InvalidRequest("gap_s must be non-negative".into()));
        }
        for s in &segments {
            if s.start_s < 0 || s.end_s <= s.start_s || duration_s.is_some_and(|d| s.end_s > d) {
                return Err(Error::InvalidRequest(format!("segment [{}, {}) out of bounds", s.start_s, s.end_s)));
            }
        }
        if segments.windows(2).any(|w| w[1].start_s <= w[0].end_s) {
            return Err(Error::InvalidRequest("segments must be sorted with gaps between them".into()));
        }
        Ok(Self { session: session.into(), student: student.into(), strategy, gap_s, segments })
    }

    fn build(session: &str, student: &str, strategy: Strategy, gap_s: i64, segments: Vec<Segment>) -> Self {
        Self { session: session.into(), student: student.into(), strategy, gap_s, segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn content_s(&self) -> i64 {
        self.segments.iter().map(Segment::len).sum()
    }

    /// Minutes touched by any segment.
    pub fn minutes(&self) -> BTreeSet<usize> {
        self.segments
            .iter()
            .flat_map(|s| (s.start_s / MINUTE_S) as usize..((s.end_s + MINUTE_S - 1) / MINUTE_S) as usize)
            .collect()
    }
}

/// Merges overlapping or touching ranges into sorted segments, dropping empty ones.
pub fn merge_ranges(mut ranges: Vec<(i64, i64)>) -> Vec<Segment> {
    ranges.retain(|(a, b)| b > a);
    ranges.sort_unstable();
    let mut out: Vec<Segment> = Vec::with_capacity(ranges.len());
    for (start, end) in ranges {
        match out.last_mut() {
            Some(last) if start <= last.end_s => last.end_s = last.end_s.max(end),
            _ => out.push(Segment::new(start, end)),
        }
    }
    out
}

/// One segment per maximal run of consecutive minutes, clipped to the session.
pub fn segments_from_minutes(minutes: &BTreeSet<usize>, duration_s: i64) -> Vec<Segment> {
    merge_ranges(
        minutes
            .iter()
            .filter(|&&k| k < minute_count(duration_s))
            .map(|&k| minute_bounds(k, duration_s))
            .collect(),
    )
}

pub fn full_recording(session: &str, student: &str, duration_s: i64, gap_s: i64) -> CutList {
    let segments = if duration_s > 0 { vec![Segment::new(0, duration_s)] } else { Vec::new() };
    CutList::build(session, student, Strategy::Full, gap_s, segments)
}

pub fn all_i_missed(missed: &MissedSet, duration_s: i64, gap_s: i64) -> CutList {
    CutList::build(
        &missed.session_ref,
        &missed.student_ref,
        Strategy::AllIMissed,
        gap_s,
        segments_from_minutes(&missed.minutes, duration_s),
    )
}

/// Tiles the session into `window_s` windows from t=0 and takes them in
/// ascending order of attention (earlier first on ties) until every missed
/// minute overlaps a taken window. Uncovered minutes count as level 0.
pub fn fixed_granularity(
    aggregates: &[MinuteAggregate],
    missed: &MissedSet,
    window_s: i64,
    duration_s: i64,
    gap_s: i64,
) -> Result<CutList> {
    let strategy = match window_s {
        30 => Strategy::Fixed30s,
        120 => Strategy::Fixed2min,
        300 => Strategy::Fixed5min,
        _ => return Err(Error::InvalidRequest(format!("window must be 30, 120 or 300 seconds, got {window_s}"))),
    };
    let build = |segments| CutList::build(&missed.session_ref, &missed.student_ref, strategy, gap_s, segments);
    if missed.minutes.is_empty() || duration_s <= 0 {
        return Ok(build(Vec::new()));
    }

    let n_windows = ((duration_s + window_s - 1) / window_s) as usize;
    let windows: Vec<(i64, i64)> =
        (0..n_windows).map(|i| (i as i64 * window_s, ((i as i64 + 1) * window_s).min(duration_s))).collect();
    let level = |k: usize| {
        aggregates.get(k).filter(|a| a.covered).and_then(|a| a.mean_level).unwrap_or(0.0)
    };
    let scores: Vec<f64> = windows
        .iter()
        .map(|&(ws, we)| {
            let first = (ws / MINUTE_S) as usize;
            let last = ((we - 1) / MINUTE_S) as usize;
            let weighted: f64 = (first..=last)
                .map(|k| {
                    let (ms, me) = minute_bounds(k, duration_s);
                    (me.min(we) - ms.max(ws)) as f64 * level(k)
                })
                .sum();
            weighted / (we - ws) as f64
        })
        .collect();

    let mut order: Vec<usize> = (0..n_windows).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));

    let mut uncovered = missed.minutes.clone();
    let mut chosen = Vec::new();
    for i in order {
        if uncovered.is_empty() {
            break;
        }
        let (ws, we) = windows[i];
        uncovered.retain(|&k| {
            let (ms, me) = minute_bounds(k, duration_s);
            !(ms < we && ws < me)
        });
        chosen.push((ws, we));
    }
    Ok(build(merge_ranges(chosen)))
}

/// Per-minute mean over classmates' covered minutes; `None` where fewer than
/// `min_peers` classmates are covered.
pub fn class_minute_means(peers: &[Vec<MinuteAggregate>], n_minutes: usize, min_peers: usize) -> Vec<Option<f64>> {
    (0..n_minutes)
        .map(|k| {
            let levels: Vec<f64> =
                peers.iter().filter_map(|p| p.get(k)).filter(|a| a.covered).filter_map(|a| a.mean_level).collect();
            (levels.len() >= min_peers.max(1)).then(|| levels.iter().sum::<f64>() / levels.len() as f64)
        })
        .collect()
}

/// Missed minutes during which the class, on average, was at or above its
/// own session median.
pub fn peer_informed(missed: &MissedSet, class_means: &[Option<f64>], duration_s: i64, gap_s: i64) -> Result<CutList> {
    let eligible: Vec<f64> = class_means.iter().flatten().copied().collect();
    let class_median = median(&eligible).ok_or(Error::InsufficientClassData)?;
    let minutes: BTreeSet<usize> = missed
        .minutes
        .iter()
        .copied()
        .filter(|&k| class_means.get(k).copied().flatten().is_some_and(|m| m >= class_median))
        .collect();
    Ok(CutList::build(
        &missed.session_ref,
        &missed.student_ref,
        Strategy::PeerInformed,
        gap_s,
        segments_from_minutes(&minutes, duration_s),
    ))
}

/// A range of the recording a student actually played.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageEvent {
    pub student_ref: String,
    pub session_ref: String,
    pub start_s: i64,
    pub end_s: i64,
    pub strategy_played: Strategy,
    pub at_ms: i64,
}

/// Per-second count of plays over `[0, duration_s)`.
pub fn replay_counts<'a>(events: impl IntoIterator<Item = &'a UsageEvent>, duration_s: i64) -> Vec<u32> {
    let mut counts = vec![0u32; duration_s.max(0) as usize];
    for e in events {
        let (a, b) = (e.start_s.max(0), e.end_s.min(duration_s));
        for c in counts.iter_mut().take(b.max(0) as usize).skip(a as usize) {
            *c += 1;
        }
    }
    counts
}

/// Minutes classmates replayed at `factor` times the session's mean replay
/// rate or more, and that this student has not played at all.
pub fn replay_heat(
    session_ref: &str,
    student_ref: &str,
    class_usage: &[UsageEvent],
    own_usage: &[UsageEvent],
    duration_s: i64,
    factor: f64,
    gap_s: i64,
) -> CutList {
    let heat = replay_counts(class_usage.iter().filter(|e| e.student_ref != student_ref), duration_s);
    let own = replay_counts(own_usage, duration_s);
    let total: u64 = heat.iter().map(|&c| c as u64).sum();
    let mut minutes = BTreeSet::new();
    if total > 0 {
        let mean_heat = total as f64 / heat.len() as f64;
        for k in 0..minute_count(duration_s) {
            let (a, b) = minute_bounds(k, duration_s);
            let span = a as usize..b as usize;
            let minute_heat = heat[span.clone()].iter().map(|&c| c as f64).sum::<f64>() / (b - a) as f64;
            if minute_heat >= factor * mean_heat && own[span].iter().all(|&c| c == 0) {
                minutes.insert(k);
            }
        }
    }
    CutList::build(session_ref, student_ref, Strategy::ReplayHeat, gap_s, segments_from_minutes(&minutes, duration_s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub segment: Segment,
    pub leading_gap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackManifest {
    pub entries: Vec<ManifestEntry>,
    pub gap_s: i64,
    pub total_playback_s: i64,
}

/// Marks a gap before every segment that does not continue from the previous
/// position (the recording start, for the first segment).
pub fn render_manifest(cuts: &CutList) -> PlaybackManifest {
    let mut cursor = 0;
    let mut total = 0;
    let entries = cuts
        .segments
        .iter()
        .map(|&segment| {
            let leading_gap = segment.start_s != cursor;
            cursor = segment.end_s;
            total += segment.len() + if leading_gap { cuts.gap_s } else { 0 };
            ManifestEntry { segment, leading_gap }
        })
        .collect();
    PlaybackManifest { entries, gap_s: cuts.gap_s, total_playback_s: total }
}

/// A concat-demuxer playlist that cuts the summary out of `recording`.
pub fn concat_playlist(cuts: &CutList, recording: &str) -> String {
    let quoted = recording.replace('\'', r"'\''");
    let mut out = String::from("ffconcat version 1.0\n");
    for entry in render_manifest(cuts).entries {
        if entry.leading_gap {
            let _ = writeln!(out, "# gap {}s", cuts.gap_s);
        }
        let _ = writeln!(out, "file '{quoted}'");
        let _ = writeln!(out, "inpoint {}", entry.segment.start_s);
        let _ = writeln!(out, "outpoint {}", entry.segment.end_s);
    }
    out
}

pub fn cut_list_csv(cuts: &CutList) -> String {
    let mut out = String::from("start_s,end_s\n");
    for s in &cuts.segments {
        let _ = writeln!(out, "{},{}", s.start_s, s.end_s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use super::Strategy;

    fn missed(minutes: impl IntoIterator<Item = usize>) -> MissedSet {
        MissedSet { session_ref: "x".into(), student_ref: "s".into(), minutes: minutes.into_iter().collect(), threshold_used: Some(0.5) }
    }

    fn aggs(levels: &[Option<f64>]) -> Vec<MinuteAggregate> {
        levels
            .iter()
            .enumerate()
            .map(|(k, l)| MinuteAggregate { minute_index: k, mean_level: *l, sample_count: if l.is_some() { 60 } else { 0 }, covered: l.is_some() })
            .collect()
    }

    fn segs(c: &CutList) -> Vec<(i64, i64)> {
        c.segments().iter().map(|s| (s.start_s, s.end_s)).collect()
    }

    fn usage(student: &str, start: i64, end: i64) -> UsageEvent {
        UsageEvent { student_ref: student.into(), session_ref: "x".into(), start_s: start, end_s: end, strategy_played: Strategy::Full, at_ms: 0 }
    }

    #[test]
    fn runs_become_segments() {
        let c = all_i_missed(&missed([3, 4, 5, 9]), 600, 3);
        assert_eq!(segs(&c), vec![(180, 360), (540, 600)]);
        assert!(all_i_missed(&missed([]), 600, 3).segments().is_empty());
    }

    #[test]
    fn last_segment_clipped_to_duration() {
        let c = all_i_missed(&missed([0, 1, 2]), 150, 3);
        assert_eq!(segs(&c), vec![(0, 150)]);
    }

    #[test]
    fn fixed_window_covers_missed_minute() {
        let a = aggs(&[Some(0.9), Some(0.1), Some(0.8), Some(0.7)]);
        let c = fixed_granularity(&a, &missed([1]), 120, 240, 3).unwrap();
        assert_eq!(segs(&c), vec![(0, 120)]);
        assert_eq!(c.strategy, Strategy::Fixed2min);
    }

    #[test]
    fn fixed_windows_empty_when_nothing_missed() {
        let a = aggs(&[Some(0.5); 10]);
        for w in [30, 120, 300] {
            assert!(fixed_granularity(&a, &missed([]), w, 600, 3).unwrap().segments().is_empty());
        }
        assert!(fixed_granularity(&a, &missed([1]), 45, 600, 3).is_err());
    }

    #[test]
    fn fixed_windows_take_lower_ranked_first() {
        // minute 4 missed; window [0,120) scores lower and is taken first
        let a = aggs(&[Some(0.1), Some(0.1), Some(0.9), Some(0.9), Some(0.3), Some(0.9)]);
        let c = fixed_granularity(&a, &missed([4]), 120, 360, 3).unwrap();
        assert_eq!(segs(&c), vec![(0, 120), (240, 360)]);
    }

    #[test]
    fn uncovered_minutes_rank_first() {
        let a = aggs(&[Some(0.2), None, Some(0.2), Some(0.2)]);
        let c = fixed_granularity(&a, &missed([1]), 30, 240, 3).unwrap();
        assert_eq!(segs(&c), vec![(60, 90)]);
    }

    #[test]
    fn peer_filter() {
        let class = [0.3, 0.3, 0.9, 0.3, 0.3, 0.8].map(Some);
        let c = peer_informed(&missed([2, 5]), &class, 360, 3).unwrap();
        assert_eq!(segs(&c), vec![(120, 180), (300, 360)]);

        let c = peer_informed(&missed([0, 2]), &[Some(0.1), Some(0.5), Some(0.2), Some(0.9)], 240, 3).unwrap();
        assert!(c.segments().is_empty(), "class below its median in both missed minutes");

        assert!(peer_informed(&missed([]), &class, 360, 3).unwrap().segments().is_empty());

        let flat = [Some(0.4); 6];
        let m = missed([0, 1, 4]);
        assert_eq!(segs(&peer_informed(&m, &flat, 360, 3).unwrap()), segs(&all_i_missed(&m, 360, 3)));

        assert!(matches!(peer_informed(&m, &[None; 6], 360, 3), Err(Error::InsufficientClassData)));
    }

    #[test]
    fn class_means_require_peers() {
        let p1 = aggs(&[Some(0.2), Some(0.4), None]);
        let p2 = aggs(&[Some(0.4), None, None]);
        let means = class_minute_means(&[p1, p2], 3, 2);
        assert!((means[0].unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(&means[1..], &[None, None]);
    }

    #[test]
    fn hot_region_replayed_by_others() {
        let class: Vec<_> = ["a", "b", "c"].iter().flat_map(|s| [usage(s, 120, 180), usage(s, 120, 180)]).collect();
        let counts = replay_counts(&class, 600);
        assert!(counts[120..180].iter().all(|&c| c == 6));
        let c = replay_heat("x", "me", &class, &[], 600, 2.0, 3);
        assert_eq!(segs(&c), vec![(120, 180)]);

        assert!(replay_heat("x", "me", &[], &[], 600, 2.0, 3).segments().is_empty());

        let mine = [usage("me", 150, 160)];
        assert!(replay_heat("x", "me", &class, &mine, 600, 2.0, 3).segments().is_empty());
    }

    #[test]
    fn own_events_excluded_from_class_heat() {
        let class = vec![usage("me", 0, 60), usage("me", 0, 60)];
        assert!(replay_heat("x", "me", &class, &[], 600, 2.0, 3).segments().is_empty());
    }

    #[test]
    fn manifest_arithmetic() {
        let c = all_i_missed(&missed([3, 4, 5, 9]), 600, 3);
        let m = render_manifest(&c);
        assert!(m.entries.iter().all(|e| e.leading_gap));
        assert_eq!(m.total_playback_s, 246);

        let c = all_i_missed(&missed([0, 1, 2, 3, 4]), 600, 3);
        let m = render_manifest(&c);
        assert_eq!(m.entries.len(), 1);
        assert!(!m.entries[0].leading_gap);
        assert_eq!(m.total_playback_s, 300);

        assert_eq!(render_manifest(&all_i_missed(&missed([]), 600, 3)).total_playback_s, 0);
    }

    #[test]
    fn cut_list_json_shape() {
        let c = all_i_missed(&missed([3, 4, 5, 9]), 600, 3);
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "session": "x", "student": "s", "strategy": "all_i_missed", "gap_s": 3,
                "segments": [{"start_s": 180, "end_s": 360}, {"start_s": 540, "end_s": 600}],
                "total_playback_s": 246
            })
        );
        let back: CutList = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
        let bad = serde_json::json!({"session": "x", "student": "s", "strategy": "full", "gap_s": 3,
            "segments": [{"start_s": 10, "end_s": 20}, {"start_s": 20, "end_s": 30}], "total_playback_s": 0});
        assert!(serde_json::from_value::<CutList>(bad).is_err());
    }

    #[test]
    fn playlist_and_csv() {
        let c = all_i_missed(&missed([0, 9]), 600, 3);
        assert_eq!(
            concat_playlist(&c, "/rec/it's.mp4"),
            "ffconcat version 1.0\nfile '/rec/it'\\''s.mp4'\ninpoint 0\noutpoint 60\n# gap 3s\nfile '/rec/it'\\''s.mp4'\ninpoint 540\noutpoint 600\n"
        );
        assert_eq!(cut_list_csv(&c), "start_s,end_s\n0,60\n540,600\n");
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
            assert_eq!(serde_json::to_value(s).unwrap(), serde_json::Value::String(s.as_str().into()));
        }
        assert_eq!("replay-heat".parse::<Strategy>().unwrap(), Strategy::ReplayHeat);
        assert_eq!("peer".parse::<Strategy>().unwrap(), Strategy::PeerInformed);
        assert!(matches!("best".parse::<Strategy>(), Err(Error::UnknownStrategy(_))));
    }

    fn brute_runs(minutes: &BTreeSet<usize>) -> usize {
        minutes.iter().filter(|&&k| k == 0 || !minutes.contains(&(k - 1))).count()
    }

    fn valid(c: &CutList, duration: i64) -> bool {
        CutList::new(&c.session, &c.student, c.strategy, c.gap_s, c.segments.clone(), Some(duration)).is_ok()
    }

    proptest! {
        #[test]
        fn all_i_missed_runs_and_union(minutes in prop::collection::btree_set(0usize..500, 0..300)) {
            let duration = 500 * 60;
            let c = all_i_missed(&missed(minutes.iter().copied()), duration, 3);
            prop_assert!(valid(&c, duration));
            prop_assert_eq!(c.segments().len(), brute_runs(&minutes));
            let secs: BTreeSet<i64> = c.segments().iter().flat_map(|s| s.start_s..s.end_s).collect();
            let want: BTreeSet<i64> = minutes.iter().flat_map(|&k| k as i64 * 60..k as i64 * 60 + 60).collect();
            prop_assert_eq!(secs, want);
        }

        #[test]
        fn fixed_windows_cover_missed(
            levels in prop::collection::vec(prop::option::of(0.0..=1.0f64), 1..90),
            pick in prop::collection::vec(any::<bool>(), 90),
            tail in 0i64..60,
            window in prop::sample::select(vec![30i64, 120, 300]),
        ) {
            let duration = (levels.len() as i64 - 1) * 60 + tail.max(1);
            let a = aggs(&levels);
            let m = missed((0..levels.len()).filter(|&k| pick[k]));
            let c = fixed_granularity(&a, &m, window, duration, 3).unwrap();
            prop_assert!(valid(&c, duration));
            for &k in &m.minutes {
                let (ms, me) = minute_bounds(k, duration);
                prop_assert!(c.segments().iter().any(|s| s.overlaps(ms, me)), "minute {} uncovered", k);
            }
            if window >= 120 {
                prop_assert!(c.content_s() >= all_i_missed(&m, duration, 3).content_s());
            }
        }

        #[test]
        fn manifest_total(minutes in prop::collection::btree_set(0usize..200, 0..100), gap in 0i64..10) {
            let c = all_i_missed(&missed(minutes), 200 * 60, gap);
            let m = render_manifest(&c);
            let gaps = m.entries.iter().filter(|e| e.leading_gap).count() as i64;
            prop_assert_eq!(m.total_playback_s, c.content_s() + gap * gaps);
        }
    }
}
