//! The whole service over HTTP: register a course, stream a class in, close
//! the session, then fetch a student's summary and the professor's view.
//!
//! Run with: cargo run --example serve_and_ingest

use std::sync::Arc;

use lecture_recap::service::client::{replay_dataset, ApiClient};
use lecture_recap::service::{http, now_ms, Service};
use lecture_recap::sim::{simulate_class, ProfileDistribution};
use lecture_recap::summarizer::Strategy;

#[tokio::main]
async fn main() -> lecture_recap::Result<()> {
    let service = Arc::new(Service::in_memory());
    let server = http::spawn(service, "127.0.0.1:0".parse().unwrap()).await?;
    let api = ApiClient::new(server.url());
    println!("serving on {}", server.url());

    let course = api.register_course("CA349", "IT Architecture").await?;
    println!("public passcode {}, private passcode {}", course.public_passcode, course.private_passcode);

    let class = simulate_class(12, 20 * 60, &ProfileDistribution { partial_attendees: 2, ..Default::default() }, 4)?;
    let start = now_ms();
    let session = api.open_session(&course.private_passcode, Some(start)).await?;
    let stats = replay_dataset(&api, &course.public_passcode, &class, start, None).await?;
    println!("{} batches, {} samples accepted", stats.batches, stats.accepted);
    let session = api.close_session(&course.private_passcode, &session.session_id, Some(start + class.duration_s * 1000), "file://ca349.mp4").await?;

    let me = &class.students[0].token;
    for strategy in [Strategy::Full, Strategy::AllIMissed, Strategy::Fixed5min, Strategy::Fixed2min, Strategy::Fixed30s] {
        let s = api.summary(&course.public_passcode, me, &session.session_id, strategy).await?;
        println!("{strategy:<13} {:>2} segments, {:>5} s with gaps", s.cut_list.segments().len(), s.manifest.total_playback_s);
    }

    // Students cannot see the class view.
    let denied = api.class_view(&course.public_passcode, &session.session_id).await.unwrap_err();
    println!("class view with public passcode: {}", denied.code());

    let view = api.class_view(&course.private_passcode, &session.session_id).await?;
    println!("class view: {} participants over {} minutes", view.participant_count, view.matrix.minute_count());

    server.shutdown().await?;
    Ok(())
}
