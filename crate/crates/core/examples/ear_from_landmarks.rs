//! Landmarks to per-second attention for one student.
//!
//! Run with: cargo run --example ear_from_landmarks

use lecture_recap::attention::{
    compute_ear, format_landmark_records, frames_to_trace, parse_landmark_records, trace_to_csv, update_baseline, EyeLandmarks,
    LandmarkFrame, StudentBaseline,
};

fn eye(openness: f64) -> EyeLandmarks {
    EyeLandmarks::new([[0.0, 0.0], [1.0, openness], [2.0, openness], [3.0, 0.0], [2.0, -openness], [1.0, -openness]]).unwrap()
}

fn main() -> lecture_recap::Result<()> {
    for h in [0.45, 0.3, 0.1] {
        println!("lid height {h:.2} -> EAR {:.3}", compute_ear(&eye(h))?);
    }

    // Ten seconds at 5 fps: eyes open, then drooping, then the face leaves the frame.
    let start_ms = 1_603_188_000_000;
    let frames: Vec<LandmarkFrame> = (0..50)
        .map(|i| {
            let t_ms = start_ms + i * 200;
            match i / 5 {
                0..=3 => LandmarkFrame { t_ms, left: Some(eye(0.45)), right: Some(eye(0.46)) },
                4..=6 => LandmarkFrame { t_ms, left: Some(eye(0.33)), right: None },
                _ => LandmarkFrame::no_face(t_ms),
            }
        })
        .collect();

    // The record format survives a round trip.
    let text = format_landmark_records(&frames);
    assert_eq!(parse_landmark_records(&text)?.len(), frames.len());

    let ears: Vec<f64> = frames.iter().filter_map(LandmarkFrame::ear).collect();
    let cold = StudentBaseline::cold("student-1");
    let warm = update_baseline(&cold, &ears);
    println!("baseline after {} frames: mean {:.3}, σ {:.3}", warm.frames_observed, warm.ear_mean, warm.ear_variance.sqrt());

    let trace = frames_to_trace(&frames, &cold, start_ms, "student-1", "lecture-1");
    print!("{}", trace_to_csv(&trace));
    Ok(())
}
