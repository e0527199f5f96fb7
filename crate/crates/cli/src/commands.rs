use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use triage_core::metrics::{self, IccModel, SessionSummary, StatsReport};
use triage_core::service::{http, IntentRequest, JsonlSink};
use triage_core::sim::{self, AnswerPolicy, SimulationConfig, TimingModel};
use triage_core::triage::{enumerate_paths, Answer};
use triage_core::{Lexicon, SystemClock, TriageProtocol, TriageService};

use crate::GlobalOpts;

const DEFAULT_TRANSCRIPT: &str = "transcripts.jsonl";

pub struct Failure {
    pub code: u8,
    pub source: anyhow::Error,
}

/// Startup or configuration problem: exit 1.
fn config(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        source: e.into(),
    }
}

/// Malformed input data: exit 2.
fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        source: e.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn load_protocol(path: Option<&Path>) -> Result<TriageProtocol, Failure> {
    match path {
        None => Ok(TriageProtocol::default_protocol()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(config)?;
            TriageProtocol::load(&text)
                .with_context(|| format!("loading protocol {}", p.display()))
                .map_err(config)
        }
    }
}

fn load_lexicon(path: Option<&Path>) -> Result<Lexicon, Failure> {
    match path {
        None => Ok(Lexicon::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(config)?;
            Lexicon::from_json(&text)
                .with_context(|| format!("loading lexicon {}", p.display()))
                .map_err(config)
        }
    }
}

fn transcript_path(g: &GlobalOpts) -> PathBuf {
    g.out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_TRANSCRIPT))
}

fn idle_timeout(g: &GlobalOpts) -> Option<chrono::Duration> {
    Some(chrono::Duration::seconds(g.idle_timeout as i64))
}

fn write_out(out: &mut impl Write, text: &str) -> CmdResult {
    match out.write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(config),
    }
}

fn emit(text: &str) -> CmdResult {
    write_out(&mut io::stdout().lock(), &format!("{text}\n"))
}

pub fn run(g: &GlobalOpts, input_lines: impl BufRead, mut out: impl Write) -> CmdResult {
    let protocol = load_protocol(g.protocol.as_deref())?;
    let lexicon = load_lexicon(g.lexicon.as_deref())?;
    let mut sink = JsonlSink::open(transcript_path(g)).map_err(config)?;
    let service =
        TriageService::new(Some(protocol), lexicon, Arc::new(SystemClock)).with_idle_timeout(None);

    let (id, mut response) = service.create_session().map_err(config)?;
    let mut lines = input_lines.lines();
    let mut sequence = 0;
    loop {
        let marker = if response.reprompt {
            "Sorry, I didn't catch that. "
        } else {
            ""
        };
        if response.ended {
            write_out(&mut out, &format!("\n{}\n", response.prompt))?;
            break;
        }
        write_out(
            &mut out,
            &format!(
                "\n[{}] {marker}{}\n    ({})\n> ",
                response.steps_executed,
                response.prompt,
                response.suggested_answers.join(" / ")
            ),
        )?;
        out.flush().map_err(config)?;
        let utterance = match lines.next() {
            Some(line) => line.map_err(config)?,
            None => "stop".to_owned(),
        };
        sequence += 1;
        response = service
            .handle_intent(&IntentRequest {
                session_id: id.clone(),
                sequence,
                utterance,
            })
            .map_err(config)?;
    }

    let state = service.get_session(&id).map_err(config)?.state;
    let summary = SessionSummary::from_state(&state);
    let zone = response.zone.map_or("none".to_owned(), |z| z.to_string());
    write_out(
        &mut out,
        &format!(
            "zone: {zone}  steps: {}  errors: {}  time: {:.1}s\n",
            summary.steps_executed, summary.errors, summary.duration_s
        ),
    )?;
    service.persist_transcripts(&mut sink).map_err(config)?;
    Ok(())
}

pub fn serve(g: &GlobalOpts) -> CmdResult {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let protocol = load_protocol(g.protocol.as_deref())?;
    let lexicon = load_lexicon(g.lexicon.as_deref())?;
    let path = transcript_path(g);
    let mut sink = JsonlSink::open(&path).map_err(config)?;
    let service = Arc::new(
        TriageService::new(Some(protocol), lexicon, Arc::new(SystemClock))
            .with_idle_timeout(idle_timeout(g)),
    );

    let runtime = tokio::runtime::Runtime::new().map_err(config)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", g.port))
            .await
            .with_context(|| format!("binding port {}", g.port))
            .map_err(config)?;
        tracing::info!(port = g.port, transcript = %path.display(), "serving");

        let sweeper = {
            let service = service.clone();
            tokio::spawn(async move {
                let mut tick = tokio::time::interval(Duration::from_secs(5));
                loop {
                    tick.tick().await;
                    let expired = service.expire_idle();
                    if expired > 0 {
                        tracing::info!(expired, "abandoned idle sessions");
                    }
                    if let Err(e) = service.persist_transcripts(&mut sink) {
                        tracing::error!(error = %e, "transcript flush failed");
                    }
                }
            })
        };

        axum::serve(listener, http::router(service.clone()))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(config)?;
        sweeper.abort();
        Ok::<_, Failure>(())
    })?;

    let mut sink = JsonlSink::open(&path).map_err(config)?;
    let written = service.persist_transcripts(&mut sink).map_err(config)?;
    tracing::info!(written, "transcripts flushed");
    Ok(())
}

pub fn simulate(g: &GlobalOpts, sessions: usize, policy: &str) -> CmdResult {
    let protocol = load_protocol(g.protocol.as_deref())?;
    let lexicon = load_lexicon(g.lexicon.as_deref())?;
    let policy: AnswerPolicy = policy.parse().map_err(config)?;
    let timing = TimingModel::new(g.min_delay, g.max_delay).map_err(config)?;
    let config_ = SimulationConfig {
        n_sessions: sessions,
        policy,
        timing,
        seed: g.seed,
    };
    let run = sim::simulate(protocol, lexicon, &config_).map_err(config)?;
    if let Some(path) = &g.out {
        let mut sink = JsonlSink::open(path).map_err(config)?;
        run.service.persist_transcripts(&mut sink).map_err(config)?;
    }
    emit(&run.report.to_json())
}

pub fn stats(transcript: &Path) -> CmdResult {
    let file = File::open(transcript)
        .with_context(|| format!("opening {}", transcript.display()))
        .map_err(config)?;
    let summaries = metrics::session_summaries(BufReader::new(file)).map_err(input)?;
    let report = StatsReport::from_summaries(&summaries).map_err(input)?;
    emit(&report.to_json())
}

pub fn tlx(csv_path: &Path) -> CmdResult {
    let file = File::open(csv_path)
        .with_context(|| format!("opening {}", csv_path.display()))
        .map_err(config)?;
    let records = metrics::read_tlx_csv(file).map_err(input)?;
    let mut participants = Vec::with_capacity(records.len());
    let mut scores = Vec::with_capacity(records.len());
    for r in &records {
        let score = metrics::tlx_score(r).map_err(input)?;
        scores.push(f64::from(score.0));
        participants
            .push(serde_json::json!({ "participant_id": r.participant_id, "score": score }));
    }
    let summary = metrics::summarize(&scores).map_err(input)?;
    let report = serde_json::json!({ "participants": participants, "summary": summary });
    emit(&serde_json::to_string_pretty(&report).expect("json"))
}

pub fn paths(g: &GlobalOpts) -> CmdResult {
    let protocol = load_protocol(g.protocol.as_deref())?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    write_out(&mut out, "path,answers,steps_executed,zone,terminal\n")?;
    for (i, path) in enumerate_paths(&protocol).iter().enumerate() {
        let answers: String = path
            .answers
            .iter()
            .map(|a| if a.answer == Answer::Yes { 'Y' } else { 'N' })
            .collect();
        write_out(
            &mut out,
            &format!(
                "{},{answers},{},{},{}\n",
                i + 1,
                path.steps_executed,
                path.zone,
                path.terminal_id
            ),
        )?;
    }
    Ok(())
}

pub fn icc(a: f64, b: f64, theta_min: f64, theta_max: f64, points: usize) -> CmdResult {
    let model = IccModel::new(a, b).map_err(input)?;
    let curve = model.curve(theta_min, theta_max, points).map_err(input)?;
    metrics::write_curve_csv(&curve, io::stdout().lock()).map_err(config)
}
