//! Synthetic participants for the service path.
//!
//! Each simulated session runs through [`TriageService`] on a manual clock.
//! Every executed step costs one delay drawn uniformly (whole milliseconds)
//! from the timing model: the first before the session is opened, one before
//! each answer. The per-session time is measured by a separate timer from
//! the first delay to the final response, so a session of `s` steps takes
//! between `s * min_s` and `s * max_s` seconds.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::clock::{Clock, ManualClock};
use crate::metrics::{MetricsError, SessionSummary, StatsReport};
use crate::nlu::Lexicon;
use crate::service::{IntentRequest, TriageService};
use crate::triage::{TriageProtocol, Zone};

pub const DEFAULT_MIN_DELAY_S: f64 = 1.4;
pub const DEFAULT_MAX_DELAY_S: f64 = 7.8;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("timing model needs 0 <= min_s <= max_s, got [{0}, {1}]")]
    BadTiming(f64, f64),
    #[error("bernoulli probability must be in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("need at least one session")]
    NoSessions,
    #[error("unknown answer policy `{0}` (use all-no, all-yes or bernoulli:P)")]
    UnknownPolicy(String),
    #[error("service rejected a simulated request: {0}")]
    Service(#[from] crate::service::ServiceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Per-step delay bounds, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingModel {
    pub min_s: f64,
    pub max_s: f64,
}

impl TimingModel {
    pub fn new(min_s: f64, max_s: f64) -> Result<Self, SimError> {
        if !(min_s.is_finite() && max_s.is_finite() && 0.0 <= min_s && min_s <= max_s) {
            return Err(SimError::BadTiming(min_s, max_s));
        }
        Ok(Self { min_s, max_s })
    }

    fn millis(&self) -> (i64, i64) {
        (
            (self.min_s * 1000.0).round() as i64,
            (self.max_s * 1000.0).round() as i64,
        )
    }
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            min_s: DEFAULT_MIN_DELAY_S,
            max_s: DEFAULT_MAX_DELAY_S,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnswerPolicy {
    AllNo,
    AllYes,
    /// Answer "yes" with probability `p`, independently per question.
    Bernoulli(f64),
}

impl AnswerPolicy {
    pub fn bernoulli(p: f64) -> Result<Self, SimError> {
        if (0.0..=1.0).contains(&p) {
            Ok(AnswerPolicy::Bernoulli(p))
        } else {
            Err(SimError::BadProbability(p))
        }
    }

    fn answer(&self, rng: &mut impl Rng) -> &'static str {
        let yes = match *self {
            AnswerPolicy::AllNo => false,
            AnswerPolicy::AllYes => true,
            AnswerPolicy::Bernoulli(p) => rng.random_bool(p),
        };
        if yes {
            "yes"
        } else {
            "no"
        }
    }
}

impl FromStr for AnswerPolicy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-no" => Ok(AnswerPolicy::AllNo),
            "all-yes" => Ok(AnswerPolicy::AllYes),
            _ => match s.strip_prefix("bernoulli:").map(str::parse::<f64>) {
                Some(Ok(p)) => AnswerPolicy::bernoulli(p),
                _ => Err(SimError::UnknownPolicy(s.to_owned())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedSession {
    pub session_id: String,
    pub zone: Option<Zone>,
    pub steps_executed: u32,
    pub errors: u32,
    pub duration_s: f64,
}

impl SimulatedSession {
    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            duration_s: self.duration_s,
            errors: self.errors,
            steps_executed: self.steps_executed,
        }
    }
}

#[derive(Debug)]
pub struct SimulationRun {
    pub sessions: Vec<SimulatedSession>,
    pub report: StatsReport,
    /// The service the sessions ran through, for transcript persistence.
    pub service: TriageService,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub n_sessions: usize,
    pub policy: AnswerPolicy,
    pub timing: TimingModel,
    pub seed: u64,
}

pub fn simulate(
    protocol: TriageProtocol,
    lexicon: Lexicon,
    config: &SimulationConfig,
) -> Result<SimulationRun, SimError> {
    if config.n_sessions == 0 {
        return Err(SimError::NoSessions);
    }
    let clock = Arc::new(ManualClock::fixed());
    let service = TriageService::new(Some(protocol), lexicon, clock.clone())
        .with_sequential_ids("sim")
        .with_idle_timeout(None);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = config.timing.millis();
    let delay = |rng: &mut ChaCha8Rng| {
        let ms = rng.random_range(lo..=hi);
        clock.advance_millis(ms);
    };

    let mut sessions = Vec::with_capacity(config.n_sessions);
    for _ in 0..config.n_sessions {
        let timer_start = clock.now();
        delay(&mut rng);
        let (session_id, mut response) = service.create_session()?;
        let mut sequence = 0;
        while !response.ended {
            let utterance = config.policy.answer(&mut rng);
            delay(&mut rng);
            sequence += 1;
            response = service.handle_intent(&IntentRequest {
                session_id: session_id.clone(),
                sequence,
                utterance: utterance.to_owned(),
            })?;
        }
        let state = service.get_session(&session_id)?.state;
        sessions.push(SimulatedSession {
            session_id,
            zone: response.zone,
            steps_executed: state.steps_executed,
            errors: state.error_count,
            duration_s: (clock.now() - timer_start).num_milliseconds() as f64 / 1000.0,
        });
    }

    let summaries: Vec<_> = sessions.iter().map(SimulatedSession::summary).collect();
    let report = StatsReport::from_summaries(&summaries)?;
    Ok(SimulationRun {
        sessions,
        report,
        service,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(policy: AnswerPolicy, n: usize, seed: u64) -> SimulationRun {
        let config = SimulationConfig {
            n_sessions: n,
            policy,
            timing: TimingModel::default(),
            seed,
        };
        simulate(
            TriageProtocol::default_protocol(),
            Lexicon::default(),
            &config,
        )
        .unwrap()
    }

    #[test]
    fn all_no_sessions_are_green_in_eighteen_steps() {
        let out = run(AnswerPolicy::AllNo, 22, 7);
        assert_eq!(out.sessions.len(), 22);
        for s in &out.sessions {
            assert_eq!(s.steps_executed, 18);
            assert_eq!(s.zone, Some(Zone::SafeGreen));
        }
        assert_eq!(out.report.n_sessions, 22);
        assert_eq!(out.report.steps_executed.mode, 18.0);
    }

    #[test]
    fn all_yes_sessions_stop_at_red() {
        let out = run(AnswerPolicy::AllYes, 5, 7);
        for s in &out.sessions {
            assert_eq!(s.steps_executed, 2);
            assert_eq!(s.zone, Some(Zone::RedAlert));
        }
    }

    #[test]
    fn same_seed_same_report() {
        let a = run(AnswerPolicy::Bernoulli(0.2), 30, 99);
        let b = run(AnswerPolicy::Bernoulli(0.2), 30, 99);
        assert_eq!(a.report.to_json(), b.report.to_json());
        assert_eq!(a.sessions, b.sessions);
    }

    #[test]
    fn durations_respect_per_step_bounds() {
        let out = run(AnswerPolicy::Bernoulli(0.1), 200, 3);
        for s in &out.sessions {
            let steps = f64::from(s.steps_executed);
            assert!(s.duration_s >= steps * DEFAULT_MIN_DELAY_S - 1e-9);
            assert!(s.duration_s <= steps * DEFAULT_MAX_DELAY_S + 1e-9);
        }
    }

    #[test]
    fn policy_parsing() {
        assert_eq!(
            "all-no".parse::<AnswerPolicy>().unwrap(),
            AnswerPolicy::AllNo
        );
        assert_eq!(
            "all-yes".parse::<AnswerPolicy>().unwrap(),
            AnswerPolicy::AllYes
        );
        assert_eq!(
            "bernoulli:0.25".parse::<AnswerPolicy>().unwrap(),
            AnswerPolicy::Bernoulli(0.25)
        );
        assert!("bernoulli:1.5".parse::<AnswerPolicy>().is_err());
        assert!("sometimes".parse::<AnswerPolicy>().is_err());
        assert!(TimingModel::new(2.0, 1.0).is_err());
    }
}
