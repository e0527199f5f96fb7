use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::protocol::{Edge, Recommendation, StepNode, TriageProtocol};
use super::zone::{Answer, Zone};
use crate::clock::Clock;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Step(String),
    Terminal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Completed,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub step_id: String,
    pub answer: Answer,
}

/// One user's in-flight assessment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub protocol_version: u32,
    pub current: Position,
    pub answers: Vec<AnswerRecord>,
    pub steps_executed: u32,
    /// Reprompts caused by unrecognized utterances.
    pub error_count: u32,
    pub started_at: DateTime<Utc>,
    pub ended_at: Option<DateTime<Utc>>,
    pub last_activity_at: DateTime<Utc>,
    pub status: SessionStatus,
}

impl SessionState {
    pub fn current_step_id(&self) -> Option<&str> {
        match &self.current {
            Position::Step(id) => Some(id),
            Position::Terminal(_) => None,
        }
    }

    pub fn terminal_id(&self) -> Option<&str> {
        match &self.current {
            Position::Terminal(id) => Some(id),
            Position::Step(_) => None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == SessionStatus::Active
    }

    /// Marks the session abandoned. No-op unless active.
    pub fn abandon(&mut self, at: DateTime<Utc>) {
        if self.is_active() {
            self.status = SessionStatus::Abandoned;
            self.ended_at = Some(at);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    NextQuestion(StepNode),
    Final(Recommendation),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("session has already ended")]
    SessionEnded,
    #[error("session was started under protocol version {session}, engine has version {protocol}")]
    ProtocolMismatch { session: u32, protocol: u32 },
    #[error("session points at `{0}`, which is not a step of this protocol")]
    UnknownPosition(String),
    #[error("answers do not form a path through the protocol: {0}")]
    InvalidTrace(String),
}

impl TriageProtocol {
    /// Opens a session positioned at the first question.
    pub fn start_session(
        &self,
        session_id: impl Into<String>,
        clock: &dyn Clock,
    ) -> (SessionState, StepNode) {
        let now = clock.now();
        let first = self.first_step();
        let state = SessionState {
            session_id: session_id.into(),
            protocol_version: self.version(),
            current: Position::Step(first.id.clone()),
            answers: Vec::new(),
            steps_executed: 1,
            error_count: 0,
            started_at: now,
            ended_at: None,
            last_activity_at: now,
            status: SessionStatus::Active,
        };
        (state, first.clone())
    }

    /// Applies one answer. The terminal recommendation counts as a step.
    pub fn advance(
        &self,
        mut state: SessionState,
        answer: Answer,
        clock: &dyn Clock,
    ) -> Result<(SessionState, StepOutcome), EngineError> {
        if !state.is_active() {
            return Err(EngineError::SessionEnded);
        }
        if state.protocol_version != self.version() {
            return Err(EngineError::ProtocolMismatch {
                session: state.protocol_version,
                protocol: self.version(),
            });
        }
        let step_id = match &state.current {
            Position::Step(id) => id.clone(),
            Position::Terminal(_) => return Err(EngineError::SessionEnded),
        };
        let step = self
            .step(&step_id)
            .ok_or_else(|| EngineError::UnknownPosition(step_id.clone()))?;

        let now = clock.now();
        state.answers.push(AnswerRecord { step_id, answer });
        state.steps_executed += 1;
        state.last_activity_at = now;

        let outcome = match step.edge(answer) {
            Edge::Next(id) => {
                let next = self.step(id).expect("validated edge");
                state.current = Position::Step(id.clone());
                StepOutcome::NextQuestion(next.clone())
            }
            Edge::Terminal(id) => {
                let rec = self.terminal(id).expect("validated edge");
                state.current = Position::Terminal(id.clone());
                state.status = SessionStatus::Completed;
                state.ended_at = Some(now);
                StepOutcome::Final(rec.clone())
            }
        };
        Ok((state, outcome))
    }
}

/// Zone implied by a set of answers, without consulting terminal zones:
/// red if any red-alert step was answered yes, else yellow if any mild-yellow
/// step was, else green. The answers must trace a path (or a prefix of one)
/// from the first step.
pub fn classify(answers: &[AnswerRecord], protocol: &TriageProtocol) -> Result<Zone, EngineError> {
    let mut expected = Some(protocol.first_step());
    let mut zone = Zone::SafeGreen;
    for (i, record) in answers.iter().enumerate() {
        let step = match expected {
            Some(step) if step.id == record.step_id => step,
            Some(step) => {
                return Err(EngineError::InvalidTrace(format!(
                    "answer {i} is for `{}` but the path is at `{}`",
                    record.step_id, step.id
                )))
            }
            None => {
                return Err(EngineError::InvalidTrace(format!(
                    "answer {i} for `{}` comes after the path reached a terminal",
                    record.step_id
                )))
            }
        };
        if record.answer == Answer::Yes {
            zone = zone.max(step.zone);
        }
        expected = match step.edge(record.answer) {
            Edge::Next(id) => protocol.step(id),
            Edge::Terminal(_) => None,
        };
    }
    Ok(zone)
}
