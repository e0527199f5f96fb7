use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(
    name = "triage",
    version,
    about = "Yes/no self-assessment triage: console, service, simulation and reports"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Protocol document (JSON). Defaults to the bundled protocol.
    #[arg(long, global = true, env = "TRIAGE_PROTOCOL")]
    pub protocol: Option<PathBuf>,
    /// Lexicon override (JSON).
    #[arg(long, global = true, env = "TRIAGE_LEXICON")]
    pub lexicon: Option<PathBuf>,
    /// Transcript output (JSONL, appended).
    #[arg(long, global = true, env = "TRIAGE_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "TRIAGE_PORT", default_value_t = 8080,
          value_parser = clap::value_parser!(u16).range(1..))]
    pub port: u16,
    #[arg(long, global = true, env = "TRIAGE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Seconds of inactivity before a session is abandoned.
    #[arg(
        long,
        global = true,
        env = "TRIAGE_IDLE_TIMEOUT",
        default_value_t = 300
    )]
    pub idle_timeout: u64,
    /// Lower bound of the simulated per-step delay, seconds.
    #[arg(long, global = true, default_value_t = triage_core::sim::DEFAULT_MIN_DELAY_S)]
    pub min_delay: f64,
    /// Upper bound of the simulated per-step delay, seconds.
    #[arg(long, global = true, default_value_t = triage_core::sim::DEFAULT_MAX_DELAY_S)]
    pub max_delay: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interactive assessment on the console.
    Run,
    /// Serve the REST API.
    Serve,
    /// Drive synthetic sessions through the service and print a stats report.
    Simulate {
        #[arg(long, short = 'n', default_value_t = 22)]
        sessions: usize,
        /// all-no, all-yes or bernoulli:P
        #[arg(long, default_value = "all-no")]
        policy: String,
    },
    /// Stats report from a JSONL transcript.
    Stats { transcript: PathBuf },
    /// Workload scores from a TLX CSV.
    Tlx { csv: PathBuf },
    /// Every path through the protocol, as CSV.
    Paths,
    /// Item characteristic curve as `theta,probability` CSV.
    Icc {
        #[arg(long, short = 'a', default_value_t = 1.0)]
        discrimination: f64,
        #[arg(long, short = 'b', default_value_t = 0.0, allow_hyphen_values = true)]
        difficulty: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        theta_min: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        theta_max: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match cli.command {
        Command::Run => commands::run(g, io::stdin().lock(), io::stdout().lock()),
        Command::Serve => commands::serve(g),
        Command::Simulate { sessions, policy } => commands::simulate(g, sessions, &policy),
        Command::Stats { transcript } => commands::stats(&transcript),
        Command::Tlx { csv } => commands::tlx(&csv),
        Command::Paths => commands::paths(g),
        Command::Icc {
            discrimination,
            difficulty,
            theta_min,
            theta_max,
            points,
        } => commands::icc(discrimination, difficulty, theta_min, theta_max, points),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.source);
            ExitCode::from(e.code)
        }
    }
}
