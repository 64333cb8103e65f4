//! End-to-end runs of the `recap` binary. Outputs that do not depend on the
//! per-session pseudonym salt are pinned by files under `tests/golden`; set
//! `UPDATE_GOLDEN=1` to rewrite them.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/small_class.toml")
}

fn recap(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recap"))
        .env_remove("RECAP_CONFIG")
        .arg("--store")
        .arg(store)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(store: &Path, args: &[&str]) -> String {
    let out = recap(store, args);
    assert!(out.status.success(), "recap {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from {name}");
}

/// A store holding the fixture class as a closed session.
fn loaded() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let scenario = fixture();
    stdout(&store, &["simulate", "--scenario", scenario.to_str().unwrap(), "--course", "CA349", "--recording", "file://ca349.mp4"]);
    (dir, store)
}

#[test]
fn summarize_formats() {
    let (_dir, store) = loaded();
    golden("steady_all_i_missed.csv", &stdout(&store, &["summarize", "--student", "steady", "--format", "csv"]));
    golden("late_all_i_missed.txt", &stdout(&store, &["summarize", "--student", "late", "--format", "pretty"]));
    golden("late_fixed_2min.csv", &stdout(&store, &["summarize", "--student", "late", "--strategy", "fixed_2min", "--format", "csv"]));
    golden("flat_peer.csv", &stdout(&store, &["summarize", "--student", "flat", "--strategy", "peer", "--format", "csv"]));

    let playlist = store.parent().unwrap().join("late.ffconcat");
    stdout(&store, &["summarize", "--student", "late", "--playlist", playlist.to_str().unwrap()]);
    golden("late.ffconcat", &std::fs::read_to_string(playlist).unwrap());

    let json: serde_json::Value = serde_json::from_str(&stdout(&store, &["summarize", "--student", "late"])).unwrap();
    assert_eq!(json["cut_list"]["strategy"], "all_i_missed");
    assert_eq!(json["recording_uri"], "file://ca349.mp4");
    assert_eq!(json["manifest"]["total_playback_s"], json["cut_list"]["total_playback_s"]);
}

#[test]
fn replay_heat_from_logged_usage() {
    let (_dir, store) = loaded();
    // steady and toggler each replayed minutes 2-3 once: heat there is 2 per second
    // against a session mean of 0.4, and "late" never played anything.
    let csv = stdout(&store, &["summarize", "--student", "late", "--strategy", "replay-heat", "--format", "csv"]);
    assert_eq!(csv, "start_s,end_s\n120,240\n");
    let csv = stdout(&store, &["summarize", "--student", "steady", "--strategy", "replay-heat", "--format", "csv"]);
    assert_eq!(csv, "start_s,end_s\n");
}

#[test]
fn student_without_trace_gets_whole_session() {
    let (_dir, store) = loaded();
    assert_eq!(stdout(&store, &["summarize", "--student", "nobody", "--format", "csv"]), "start_s,end_s\n0,600\n");
}

#[test]
fn summary_table_for_all_students() {
    let (_dir, store) = loaded();
    let table = stdout(&store, &["summarize", "--all", "--format", "pretty"]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "Student     Summary segments (minutes)  No. Segments  Duration (min)");
    assert_eq!(lines.len(), 2 + 4);
    assert!(lines[2..].iter().all(|l| l.starts_with("P-")));
    let csv = stdout(&store, &["summarize", "--all", "--format", "csv"]);
    assert!(csv.starts_with("student,segments,segment_count,duration_min,total_playback_s\n"));
}

#[test]
fn simulate_writes_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let scenario = fixture();
    stdout(&dir.path().join("store"), &["simulate", "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    golden("late_trace.csv", &std::fs::read_to_string(out.join("traces/late.csv")).unwrap());
    let flat = std::fs::read_to_string(out.join("traces/flat.csv")).unwrap();
    assert_eq!(flat.lines().count(), 601);
    assert!(flat.lines().skip(1).all(|l| l.ends_with(",0.4,true")));

    // seeded runs are byte-identical
    let again = dir.path().join("again");
    stdout(&dir.path().join("store"), &["simulate", "--scenario", scenario.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(out.join("traces/steady.csv")).unwrap(), std::fs::read(again.join("traces/steady.csv")).unwrap());
}

#[test]
fn volatility_report_on_constant_traces_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("flat.json");
    let students: Vec<_> = (0..3)
        .map(|i| serde_json::json!({"token": format!("s{i}"), "base_level": 0.3 + 0.2 * i as f64, "noise_sigma": 0.0, "attendance": [[0, 1200]], "seed": i}))
        .collect();
    std::fs::write(&scenario, serde_json::json!({"duration_s": 1200, "seed": 1, "students": students}).to_string()).unwrap();
    let store = dir.path().join("store");
    stdout(&store, &["simulate", "--scenario", scenario.to_str().unwrap(), "--course", "FLAT"]);

    let csv = stdout(&store, &["volatility-report", "--format", "csv"]);
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(&r[1..4], ["0.000000", "0.000000", "0.000000"], "{r:?}");
    }
    let per_minute = stdout(&store, &["volatility-report", "--per-minute"]);
    assert_eq!(per_minute.lines().count(), 1 + 20);
}

#[test]
fn class_chart_outputs() {
    let (dir, store) = loaded();
    let svg = dir.path().join("chart.svg");
    let csv = stdout(&store, &["class-chart", "--format", "csv", "--svg", svg.to_str().unwrap()]);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header[0], "minute");
    assert_eq!(header.len(), 1 + 4);
    assert_eq!(csv.lines().count(), 1 + 10);
    // "late" is absent for the first three minutes
    let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first.iter().filter(|c| c.is_empty()).count(), 1);

    let json: serde_json::Value = serde_json::from_str(&stdout(&store, &["class-chart"])).unwrap();
    assert_eq!(json["minutes"].as_array().unwrap().len(), 10);
    assert_eq!(json["participants"].as_array().unwrap().len(), 4);
    let text = std::fs::read_to_string(svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<rect"));
    for token in ["steady", "toggler", "late", "flat"] {
        assert!(!csv.contains(token) && !text.contains(token));
    }
}

#[test]
fn export_is_pseudonymous() {
    let (dir, store) = loaded();
    let out = dir.path().join("export");
    let printed = stdout(&store, &["export", "--out", out.to_str().unwrap()]);
    let session_dir = PathBuf::from(printed.trim());
    let traces: Vec<_> = std::fs::read_dir(session_dir.join("traces")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(traces.len(), 4);
    assert!(traces.iter().all(|n| n.to_string_lossy().starts_with("P-")));
    let usage = std::fs::read_to_string(session_dir.join("usage.json")).unwrap();
    assert!(!usage.contains("steady") && usage.contains("P-"));
}

#[test]
fn errors_map_to_exit_codes() {
    let (_dir, store) = loaded();
    let cases: [(&[&str], i32, &str); 4] = [
        (&["summarize", "--session", "missing", "--student", "x"], 4, "unknown_session:"),
        (&["summarize", "--student", "x", "--strategy", "slowest"], 2, "unknown_strategy:"),
        (&["register-course", "--code", "CA349"], 2, "duplicate_course:"),
        (&["simulate", "--students", "0"], 2, "invalid_request:"),
    ];
    for (args, code, prefix) in cases {
        let out = recap(&store, args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.lines().any(|l| l.starts_with(prefix)), "{args:?}: {err}");
    }
}

#[test]
fn register_course_prints_passcodes() {
    let dir = tempfile::tempdir().unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout(&dir.path().join("s"), &["register-course", "--code", "CA358", "--title", "Databases"])).unwrap();
    assert_eq!(json["course_code"], "CA358");
    assert_ne!(json["public_passcode"], json["private_passcode"]);
}
