//! Per-student attention variability for a simulated class of six: σ of the
//! per-second levels, σ of the minute means and the mean log-return
//! volatility inside each minute.
//!
//! Run with: cargo run --example volatility_table

use lecture_recap::analytics::{log_return_volatility, volatility_report, DEFAULT_VOLATILITY_FLOOR};
use lecture_recap::aggregation::DEFAULT_COVERAGE_QUORUM;
use lecture_recap::report::{volatility_csv, volatility_pretty};
use lecture_recap::sim::{simulate_class, ProfileDistribution};

fn main() -> lecture_recap::Result<()> {
    let alternating: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.3 } else { 0.6 }).collect();
    println!("a, 2a, a, ... -> {:.6} (ln 2 = {:.6})", log_return_volatility(&alternating, DEFAULT_VOLATILITY_FLOOR)?, 2f64.ln());

    let duration_s = 45 * 60;
    let dist = ProfileDistribution { togglers: 1, toggle_minutes_per_student: 12, ..ProfileDistribution::default() };
    let class = simulate_class(6, duration_s, &dist, 5)?;
    let report = volatility_report(&class.traces, duration_s, DEFAULT_VOLATILITY_FLOOR, DEFAULT_COVERAGE_QUORUM);

    print!("{}", volatility_pretty(&report));
    println!();
    print!("{}", volatility_csv(&report));

    let top = report.students.iter().max_by(|a, b| a.mean_minute_volatility.total_cmp(&b.mean_minute_volatility)).unwrap();
    println!("\nmost volatile: {} (the toggling student is {})", top.student, class.students[0].token);
    Ok(())
}
