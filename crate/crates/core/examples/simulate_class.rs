//! Seeded synthetic classes, from flags or from a scenario file.
//!
//! Run with: cargo run --example simulate_class

use lecture_recap::attention::trace_to_csv;
use lecture_recap::sim::{simulate_class, ProfileDistribution, Scenario};

const SCENARIO: &str = r#"
duration_s = 600
seed = 1

[[students]]
token = "steady"
base_level = 0.7
noise_sigma = 0.05
attendance = [[0, 600]]
seed = 10

[[students]]
token = "late-toggler"
base_level = 0.5
noise_sigma = 0.05
attendance = [[120, 600]]
toggle_minutes = [4, 5]
seed = 11

[[usage]]
token = "steady"
start_s = 240
end_s = 360
"#;

fn main() -> lecture_recap::Result<()> {
    let dist = ProfileDistribution { partial_attendees: 3, togglers: 1, replays_per_student: 2, ..ProfileDistribution::default() };
    let class = simulate_class(9, 45 * 60, &dist, 7)?;
    for (s, t) in class.students.iter().zip(&class.traces) {
        println!(
            "{}  base {:.2}  σ {:.3}  attendance {:?}  toggles {}  seconds {}",
            &s.token[..8],
            s.profile.base_level,
            s.profile.noise_sigma,
            s.profile.attendance,
            s.profile.toggle_minutes.len(),
            t.len()
        );
    }
    println!("{} replayed ranges logged", class.usage.len());

    // Same seed, same bytes.
    let again = simulate_class(9, 45 * 60, &dist, 7)?;
    assert_eq!(trace_to_csv(&class.traces[0]), trace_to_csv(&again.traces[0]));

    let scenario: Scenario = toml::from_str(SCENARIO).expect("scenario parses");
    let small = scenario.to_dataset()?;
    for t in &small.traces {
        println!("{}: first second {:?}, {} samples", t.student_ref, t.samples().first().map(|s| s.t), t.len());
    }
    Ok(())
}
