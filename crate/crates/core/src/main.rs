use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lecture_recap::analytics::ClassAttentionMatrix;
use lecture_recap::attention::trace_to_csv;
use lecture_recap::aggregation::{aggregates_to_csv, minute_aggregates, minute_count};
use lecture_recap::config::ServiceConfig;
use lecture_recap::report::{class_chart_svg, minute_volatility_csv, volatility_csv, volatility_pretty, SummaryRow};
use lecture_recap::service::client::{replay_dataset, ApiClient};
use lecture_recap::service::{http, now_ms, Service, SessionState};
use lecture_recap::sim::{simulate_class, ClassDataset, ProfileDistribution, Scenario};
use lecture_recap::summarizer::{concat_playlist, cut_list_csv, Strategy};
use lecture_recap::{Error, Result};

#[derive(Parser)]
#[command(name = "recap", version, about = "Attention-based lecture summaries")]
struct Cli {
    /// TOML config file; RECAP_* environment variables override it.
    #[arg(long, global = true, env = "RECAP_CONFIG")]
    config: Option<PathBuf>,
    /// Journal directory, overriding the config.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Args)]
struct SessionArg {
    /// Session id, or `latest` for the most recently closed one.
    #[arg(long, default_value = "latest")]
    session: String,
}

#[derive(Args)]
struct Population {
    #[arg(long, default_value_t = 9)]
    students: usize,
    #[arg(long, default_value_t = 45)]
    minutes: i64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of students (counted from the end) who arrive late or leave early.
    #[arg(long, default_value_t = 0)]
    partial: usize,
    /// Number of students (counted from the start) with toggling minutes.
    #[arg(long, default_value_t = 0)]
    togglers: usize,
    /// Replayed ranges logged per student after class.
    #[arg(long, default_value_t = 0)]
    replays: usize,
    /// Scenario file (TOML or JSON); replaces the population flags.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl Population {
    fn dataset(&self) -> Result<ClassDataset> {
        match &self.scenario {
            Some(path) => Scenario::from_path(path)?.to_dataset(),
            None => {
                let dist = ProfileDistribution {
                    partial_attendees: self.partial,
                    togglers: self.togglers,
                    replays_per_student: self.replays,
                    ..ProfileDistribution::default()
                };
                simulate_class(self.students, self.minutes * 60, &dist, self.seed)
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Register a course and print its passcodes.
    RegisterCourse {
        #[arg(long)]
        code: String,
        #[arg(long, default_value = "")]
        title: String,
        /// Register through a running server instead of the local store.
        #[arg(long)]
        server: Option<String>,
    },
    /// Generate a synthetic class; write its traces and optionally load it into the store.
    Simulate {
        #[command(flatten)]
        population: Population,
        /// Directory for trace CSVs, the scenario and usage log.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Load the class into the store under this course code.
        #[arg(long)]
        course: Option<String>,
        #[arg(long, default_value = "file://lecture.mp4")]
        recording: String,
    },
    /// Stream a synthetic class through a running server.
    IngestReplay {
        #[command(flatten)]
        population: Population,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        server: String,
        #[arg(long)]
        course: String,
        /// Course passcodes; the course is registered when these are omitted.
        #[arg(long, requires = "private_passcode")]
        public_passcode: Option<String>,
        #[arg(long)]
        private_passcode: Option<String>,
        /// Wall-clock compression; one batch is one simulated minute.
        #[arg(long)]
        speedup: Option<f64>,
        #[arg(long, default_value = "file://lecture.mp4")]
        recording: String,
    },
    /// Cut-list for one student, or a per-student table for all of them.
    Summarize {
        #[command(flatten)]
        session: SessionArg,
        #[arg(long, required_unless_present = "all")]
        student: Option<String>,
        #[arg(long, conflicts_with = "student")]
        all: bool,
        #[arg(long, default_value = "all_i_missed")]
        strategy: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Also write a concat playlist for the cut-list here.
        #[arg(long, requires = "student")]
        playlist: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-student volatility statistics.
    VolatilityReport {
        #[command(flatten)]
        session: SessionArg,
        #[arg(long, value_enum, default_value = "pretty")]
        format: Format,
        /// Emit the per-minute volatility matrix instead.
        #[arg(long)]
        per_minute: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Anonymised minute-by-participant attention matrix.
    ClassChart {
        #[command(flatten)]
        session: SessionArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Also render a stacked bar chart.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write pseudonymised traces, minute aggregates and usage for a session.
    Export {
        #[command(flatten)]
        session: SessionArg,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn resolve_session(svc: &Service, arg: &str) -> Result<String> {
    if arg != "latest" {
        return Ok(arg.to_string());
    }
    svc.sessions()
        .into_iter()
        .filter(|s| s.state == SessionState::Closed)
        .max_by_key(|s| (s.recording_end_ms, s.session_id.clone()))
        .map(|s| s.session_id)
        .ok_or_else(|| Error::UnknownSession("latest".into()))
}

fn write_dataset(dir: &Path, ds: &ClassDataset, seed: u64) -> Result<()> {
    fs::create_dir_all(dir.join("traces"))?;
    for t in &ds.traces {
        fs::write(dir.join("traces").join(format!("{}.csv", t.student_ref)), trace_to_csv(t))?;
    }
    fs::write(dir.join("scenario.json"), json(&ds.to_scenario(seed)))?;
    fs::write(dir.join("usage.json"), json(&ds.usage))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut config = ServiceConfig::load(cli.config.as_deref())?;
    if let Some(store) = cli.store {
        config.storage_path = Some(store);
    }
    let open = || Service::open(config.clone());

    match cli.command {
        Command::Serve { bind, port } => {
            let mut config = config.clone();
            config.bind = bind.unwrap_or(config.bind);
            config.port = port.unwrap_or(config.port);
            let addr: SocketAddr = format!("{}:{}", config.bind, config.port)
                .parse()
                .map_err(|e| Error::InvalidRequest(format!("bind address: {e}")))?;
            let svc = Arc::new(Service::open(config)?);
            runtime()?.block_on(http::serve(svc, addr))?;
        }
        Command::RegisterCourse { code, title, server } => {
            let course = match server {
                Some(url) => runtime()?.block_on(ApiClient::new(url).register_course(&code, &title))?,
                None => open()?.register_course(&code, &title)?,
            };
            print!("{}", json(&course));
        }
        Command::Simulate { population, out, course, recording } => {
            let ds = population.dataset()?;
            if let Some(dir) = &out {
                write_dataset(dir, &ds, population.seed)?;
            }
            match course {
                Some(code) => {
                    let svc = open()?;
                    let session = svc.load_dataset(&code, &ds, now_ms(), &recording)?;
                    print!("{}", json(&serde_json::json!({ "session": session, "students": ds.students.len() })));
                }
                None => {
                    let tokens: Vec<&str> = ds.students.iter().map(|s| s.token.as_str()).collect();
                    print!("{}", json(&serde_json::json!({ "duration_s": ds.duration_s, "students": tokens })));
                }
            }
        }
        Command::IngestReplay { population, server, course, public_passcode, private_passcode, speedup, recording } => {
            let ds = population.dataset()?;
            runtime()?.block_on(async {
                let client = ApiClient::new(server);
                let (public, private) = match (public_passcode, private_passcode) {
                    (Some(p), Some(q)) => (p, q),
                    _ => {
                        let c = client.register_course(&course, "Replayed class").await?;
                        (c.public_passcode, c.private_passcode)
                    }
                };
                let start = now_ms();
                let session = client.open_session(&private, Some(start)).await?;
                let stats = replay_dataset(&client, &public, &ds, start, speedup).await?;
                let session = client.close_session(&private, &session.session_id, Some(start + ds.duration_s * 1000), &recording).await?;
                for u in &ds.usage {
                    client.log_usage(&public, &u.student_ref, &session.session_id, u.start_s, u.end_s, u.strategy_played).await?;
                }
                print!(
                    "{}",
                    json(&serde_json::json!({
                        "session": session,
                        "public_passcode": public,
                        "batches": stats.batches,
                        "accepted": stats.accepted,
                        "dropped": stats.dropped,
                    }))
                );
                Ok::<_, Error>(())
            })?;
        }
        Command::Summarize { session, student, all, strategy, format, playlist, out } => {
            let svc = open()?;
            let id = resolve_session(&svc, &session.session)?;
            let strategy: Strategy = strategy.parse()?;
            let text = if all {
                let report = svc.summary_report(&id, strategy)?;
                match format {
                    Format::Json => json(&report),
                    Format::Csv => report.to_csv(),
                    Format::Pretty => report.to_pretty(),
                }
            } else {
                let token = student.expect("clap requires --student without --all");
                let summary = svc.summarize(&id, &token, strategy, true)?;
                if let Some(path) = &playlist {
                    fs::write(path, concat_playlist(&summary.cut_list, &summary.recording_uri))?;
                }
                match format {
                    Format::Json => json(&summary),
                    Format::Csv => cut_list_csv(&summary.cut_list),
                    Format::Pretty => {
                        let logged = svc.traces(&id)?.iter().find(|t| t.student_ref == token).map_or(0, |t| t.len());
                        let row = SummaryRow::new(token.clone(), logged, &summary.cut_list);
                        format!(
                            "{strategy}: {} segment(s), {} s of content, {} s with gaps\n{}\n",
                            row.segment_count,
                            row.content_s,
                            row.total_playback_s,
                            row.segment_spans()
                        )
                    }
                }
            };
            emit(out.as_deref(), &text)?;
        }
        Command::VolatilityReport { session, format, per_minute, out } => {
            let svc = open()?;
            let id = resolve_session(&svc, &session.session)?;
            let report = svc.volatility(&id)?;
            let minutes = minute_count(svc.session(&id)?.duration_s().unwrap_or(0));
            let text = match (format, per_minute) {
                (Format::Json, _) => json(&report),
                (_, true) => minute_volatility_csv(&report, minutes),
                (Format::Csv, false) => volatility_csv(&report),
                (Format::Pretty, false) => volatility_pretty(&report),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::ClassChart { session, format, svg, out } => {
            let svc = open()?;
            let id = resolve_session(&svc, &session.session)?;
            let view = svc.class_view(&id)?;
            if let Some(path) = &svg {
                fs::write(path, class_chart_svg(&view.matrix))?;
            }
            let text = match format {
                Format::Json => json::<ClassAttentionMatrix>(&view.matrix),
                Format::Csv | Format::Pretty => view.matrix.to_csv(),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Export { session, out } => {
            let svc = open()?;
            let id = resolve_session(&svc, &session.session)?;
            let duration = svc.session(&id)?.duration_s().unwrap_or(0);
            let quorum = svc.analysis().coverage_quorum;
            let view = svc.class_view(&id)?;
            let dir = out.join(&id);
            fs::create_dir_all(dir.join("traces"))?;
            fs::create_dir_all(dir.join("minutes"))?;
            for t in svc.pseudonymised_traces(&id)? {
                fs::write(dir.join("traces").join(format!("{}.csv", t.student_ref)), trace_to_csv(&t))?;
                fs::write(
                    dir.join("minutes").join(format!("{}.csv", t.student_ref)),
                    aggregates_to_csv(&minute_aggregates(&t, duration, quorum)),
                )?;
            }
            fs::write(dir.join("class_view.json"), json(&view))?;
            fs::write(dir.join("class_view.csv"), view.matrix.to_csv())?;
            fs::write(dir.join("usage.json"), json(&svc.pseudonymised_usage(&id)?))?;
            println!("{}", dir.display());
        }
    }
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {e}", e.code());
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
