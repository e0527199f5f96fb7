//! Session service: the intent request/response loop over the triage
//! engine, with an in-memory store and JSONL transcript persistence.

pub mod http;
mod store;
mod transcript;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use chrono::Duration;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::nlu::{self, Intent, Lexicon};
use crate::triage::{Answer, SessionState, StepNode, StepOutcome, TriageProtocol, Zone};

use store::SessionSlot;
pub use store::SessionStore;
pub use transcript::{
    read_jsonl, EntryOutcome, JsonlSink, SinkError, TranscriptEntry, TranscriptSink,
};

/// Prompt returned when the user stops a session early.
pub const FAREWELL: &str = "Okay, stopping the self-assessment. Take care.";

pub const DEFAULT_IDLE_TIMEOUT_SECS: i64 = 300;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentRequest {
    pub session_id: String,
    pub sequence: u64,
    pub utterance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentResponse {
    pub prompt: String,
    pub suggested_answers: Vec<String>,
    pub ended: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone: Option<Zone>,
    pub reprompt: bool,
    pub steps_executed: u32,
}

impl IntentResponse {
    fn question(step: &StepNode, steps_executed: u32, reprompt: bool) -> Self {
        Self {
            prompt: step.prompt.clone(),
            suggested_answers: step.suggested_answers.clone(),
            ended: false,
            zone: None,
            reprompt,
            steps_executed,
        }
    }

    fn ended(prompt: String, zone: Option<Zone>, steps_executed: u32) -> Self {
        Self {
            prompt,
            suggested_answers: Vec::new(),
            ended: true,
            zone,
            reprompt: false,
            steps_executed,
        }
    }
}

/// Read-only view of a session for `GET /v1/sessions/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    #[serde(flatten)]
    pub state: SessionState,
    pub last_sequence: u64,
    pub last_response: IntentResponse,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("no protocol is loaded")]
    Unavailable,
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` has ended")]
    SessionEnded(String),
    #[error("sequence {got} rejected for session `{session_id}`, expected {expected}")]
    SequenceConflict {
        session_id: String,
        expected: u64,
        got: u64,
    },
}

#[derive(Debug)]
enum IdSource {
    Random,
    Sequential { prefix: String, next: AtomicU64 },
}

impl IdSource {
    fn next(&self) -> String {
        match self {
            IdSource::Random => uuid::Uuid::new_v4().to_string(),
            IdSource::Sequential { prefix, next } => {
                format!("{prefix}-{:06}", next.fetch_add(1, Ordering::SeqCst))
            }
        }
    }
}

struct Loaded {
    protocol: Arc<TriageProtocol>,
    lexicon: Lexicon,
}

pub struct TriageService {
    loaded: RwLock<Option<Arc<Loaded>>>,
    lexicon: Lexicon,
    clock: Arc<dyn Clock>,
    store: SessionStore,
    ids: IdSource,
    idle_timeout: Option<Duration>,
}

impl std::fmt::Debug for TriageService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TriageService")
            .field("protocol_version", &self.protocol_version())
            .field("sessions", &self.store.len())
            .field("idle_timeout", &self.idle_timeout)
            .finish_non_exhaustive()
    }
}

impl TriageService {
    pub fn new(protocol: Option<TriageProtocol>, lexicon: Lexicon, clock: Arc<dyn Clock>) -> Self {
        let service = Self {
            loaded: RwLock::new(None),
            lexicon,
            clock,
            store: SessionStore::new(),
            ids: IdSource::Random,
            idle_timeout: Some(Duration::seconds(DEFAULT_IDLE_TIMEOUT_SECS)),
        };
        if let Some(p) = protocol {
            service.install_protocol(p);
        }
        service
    }

    /// Session ids become `prefix-000001`, `prefix-000002`, ... instead of
    /// random UUIDs. Used for replays and simulation.
    pub fn with_sequential_ids(mut self, prefix: impl Into<String>) -> Self {
        self.ids = IdSource::Sequential {
            prefix: prefix.into(),
            next: AtomicU64::new(1),
        };
        self
    }

    /// `None` disables idle expiry.
    pub fn with_idle_timeout(mut self, timeout: Option<Duration>) -> Self {
        self.idle_timeout = timeout;
        self
    }

    /// Swaps in a protocol. Existing sessions keep running against the
    /// protocol they started with only if the version is unchanged.
    pub fn install_protocol(&self, protocol: TriageProtocol) {
        let lexicon = self.lexicon.clone().with_wake_phrase(protocol.wake_word());
        *self.loaded.write() = Some(Arc::new(Loaded {
            protocol: Arc::new(protocol),
            lexicon,
        }));
    }

    fn loaded(&self) -> Result<Arc<Loaded>, ServiceError> {
        self.loaded.read().clone().ok_or(ServiceError::Unavailable)
    }

    pub fn protocol(&self) -> Option<Arc<TriageProtocol>> {
        self.loaded.read().as_ref().map(|l| l.protocol.clone())
    }

    pub fn protocol_version(&self) -> Option<u32> {
        self.loaded.read().as_ref().map(|l| l.protocol.version())
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    /// Opens a session at the first question. The wake phrase that opened
    /// it is logged as sequence 0.
    pub fn create_session(&self) -> Result<(String, IntentResponse), ServiceError> {
        let loaded = self.loaded()?;
        let protocol = &loaded.protocol;
        loop {
            let id = self.ids.next();
            let (state, step) = protocol.start_session(id.clone(), self.clock.as_ref());
            let response = IntentResponse::question(&step, state.steps_executed, false);
            let entry = TranscriptEntry {
                session_id: id.clone(),
                timestamp: state.started_at,
                sequence: 0,
                step_id: step.id.clone(),
                utterance: protocol.wake_word().to_owned(),
                intent: Intent::Wake,
                outcome: EntryOutcome::Advanced,
                error_flag: false,
            };
            let slot = SessionSlot {
                state,
                last_sequence: 0,
                entries: vec![entry],
                last_response: response.clone(),
            };
            if self.store.insert(slot) {
                return Ok((id, response));
            }
        }
    }

    pub fn handle_intent(&self, request: &IntentRequest) -> Result<IntentResponse, ServiceError> {
        let loaded = self.loaded()?;
        let protocol = &loaded.protocol;
        let slot = self
            .store
            .slot(&request.session_id)
            .ok_or_else(|| ServiceError::UnknownSession(request.session_id.clone()))?;
        let mut slot = slot.lock();
        let now = self.clock.now();

        if let Some(timeout) = self.idle_timeout {
            if slot.state.is_active() && now - slot.state.last_activity_at > timeout {
                slot.state.abandon(now);
            }
        }
        if !slot.state.is_active() {
            return Err(ServiceError::SessionEnded(request.session_id.clone()));
        }
        let expected = slot.last_sequence + 1;
        if request.sequence != expected {
            return Err(ServiceError::SequenceConflict {
                session_id: request.session_id.clone(),
                expected,
                got: request.sequence,
            });
        }

        let step_id = slot
            .state
            .current_step_id()
            .expect("active session sits on a step")
            .to_owned();
        let step = protocol
            .step(&step_id)
            .ok_or_else(|| ServiceError::SessionEnded(request.session_id.clone()))?;
        let intent = nlu::match_intent(&nlu::normalize(&request.utterance), &loaded.lexicon);

        let (response, outcome) = match intent {
            Intent::Affirm | Intent::Deny => {
                let answer = if intent == Intent::Affirm {
                    Answer::Yes
                } else {
                    Answer::No
                };
                let (state, step_outcome) = protocol
                    .advance(slot.state.clone(), answer, self.clock.as_ref())
                    .map_err(|_| ServiceError::SessionEnded(request.session_id.clone()))?;
                slot.state = state;
                match step_outcome {
                    StepOutcome::NextQuestion(next) => (
                        IntentResponse::question(&next, slot.state.steps_executed, false),
                        EntryOutcome::Advanced,
                    ),
                    StepOutcome::Final(rec) => (
                        IntentResponse::ended(
                            rec.message,
                            Some(rec.zone),
                            slot.state.steps_executed,
                        ),
                        EntryOutcome::Ended,
                    ),
                }
            }
            Intent::Stop => {
                slot.state.abandon(now);
                (
                    IntentResponse::ended(FAREWELL.to_owned(), None, slot.state.steps_executed),
                    EntryOutcome::Ended,
                )
            }
            Intent::Unknown => {
                slot.state.error_count += 1;
                (
                    IntentResponse::question(step, slot.state.steps_executed, true),
                    EntryOutcome::Repeated,
                )
            }
            Intent::Repeat | Intent::Help | Intent::Wake => (
                IntentResponse::question(step, slot.state.steps_executed, true),
                EntryOutcome::Repeated,
            ),
        };

        slot.state.last_activity_at = now;
        slot.last_sequence = request.sequence;
        slot.entries.push(TranscriptEntry {
            session_id: request.session_id.clone(),
            timestamp: now,
            sequence: request.sequence,
            step_id,
            utterance: request.utterance.clone(),
            intent,
            outcome,
            error_flag: intent == Intent::Unknown,
        });
        slot.last_response = response.clone();
        Ok(response)
    }

    pub fn get_session(&self, session_id: &str) -> Result<SessionSnapshot, ServiceError> {
        let slot = self
            .store
            .slot(session_id)
            .ok_or_else(|| ServiceError::UnknownSession(session_id.to_owned()))?;
        let slot = slot.lock();
        Ok(SessionSnapshot {
            state: slot.state.clone(),
            last_sequence: slot.last_sequence,
            last_response: slot.last_response.clone(),
        })
    }

    /// Marks idle sessions abandoned using the configured timeout.
    pub fn expire_idle(&self) -> usize {
        match self.idle_timeout {
            Some(timeout) => self.store.expire_idle(self.clock.now(), timeout),
            None => 0,
        }
    }

    /// Writes every entry the sink does not already hold, in
    /// session-then-sequence order. Returns how many were written.
    pub fn persist_transcripts(&self, sink: &mut dyn TranscriptSink) -> Result<usize, SinkError> {
        persist_transcripts(&self.store, sink)
    }
}

pub fn persist_transcripts(
    store: &SessionStore,
    sink: &mut dyn TranscriptSink,
) -> Result<usize, SinkError> {
    let mut written = 0;
    for entry in store.entries() {
        if sink.contains(&entry.session_id, entry.sequence) {
            continue;
        }
        sink.append(&entry)?;
        written += 1;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ManualClock;
    use crate::triage::SessionStatus;

    fn service() -> (TriageService, Arc<ManualClock>) {
        let clock = Arc::new(ManualClock::fixed());
        let svc = TriageService::new(
            Some(TriageProtocol::default_protocol()),
            Lexicon::default(),
            clock.clone(),
        )
        .with_sequential_ids("t");
        (svc, clock)
    }

    fn say(
        svc: &TriageService,
        id: &str,
        seq: u64,
        text: &str,
    ) -> Result<IntentResponse, ServiceError> {
        svc.handle_intent(&IntentRequest {
            session_id: id.into(),
            sequence: seq,
            utterance: text.into(),
        })
    }

    #[test]
    fn create_returns_first_red_question() {
        let (svc, _) = service();
        let (id, resp) = svc.create_session().unwrap();
        let first = TriageProtocol::default_protocol().first_step().clone();
        assert_eq!(resp.prompt, first.prompt);
        assert_eq!(resp.suggested_answers, ["yes", "no"]);
        assert!(!resp.ended);
        assert_eq!(resp.steps_executed, 1);
        let (id2, _) = svc.create_session().unwrap();
        assert_ne!(id, id2);

        let snap = svc.get_session(&id).unwrap();
        assert_eq!(snap.state.status, SessionStatus::Active);
        assert_eq!(snap.state.steps_executed, 1);
    }

    #[test]
    fn random_ids_are_unique() {
        let svc = TriageService::new(
            Some(TriageProtocol::default_protocol()),
            Lexicon::default(),
            Arc::new(ManualClock::fixed()),
        );
        let a = svc.create_session().unwrap().0;
        let b = svc.create_session().unwrap().0;
        assert_ne!(a, b);
    }

    #[test]
    fn unavailable_without_protocol() {
        let svc = TriageService::new(None, Lexicon::default(), Arc::new(ManualClock::fixed()));
        assert_eq!(svc.create_session().unwrap_err(), ServiceError::Unavailable);
        assert_eq!(svc.protocol_version(), None);
        svc.install_protocol(TriageProtocol::default_protocol());
        assert!(svc.create_session().is_ok());
    }

    #[test]
    fn yes_first_is_emergency() {
        let (svc, _) = service();
        let (id, _) = svc.create_session().unwrap();
        let resp = say(&svc, &id, 1, "yes").unwrap();
        assert!(resp.ended);
        assert_eq!(resp.zone, Some(Zone::RedAlert));
        assert!(resp.prompt.contains("911"));
        assert!(resp.suggested_answers.is_empty());
        assert_eq!(resp.steps_executed, 2);
        let snap = svc.get_session(&id).unwrap();
        assert_eq!(snap.state.status, SessionStatus::Completed);
        assert!(snap.state.ended_at.is_some());
        assert_eq!(
            say(&svc, &id, 2, "no").unwrap_err(),
            ServiceError::SessionEnded(id)
        );
    }

    #[test]
    fn gibberish_reprompts_and_counts_an_error() {
        let (svc, _) = service();
        let (id, first) = svc.create_session().unwrap();
        let resp = say(&svc, &id, 1, "blarg").unwrap();
        assert!(resp.reprompt);
        assert!(!resp.ended);
        assert_eq!(resp.prompt, first.prompt);
        assert_eq!(resp.steps_executed, 1);
        let again = say(&svc, &id, 2, "repeat that").unwrap();
        assert!(again.reprompt);

        let snap = svc.get_session(&id).unwrap();
        assert_eq!(snap.state.error_count, 1);
        assert_eq!(snap.state.steps_executed, 1);
        let entries = svc.store().entries_for(&id).unwrap();
        let flagged: Vec<_> = entries.iter().map(|e| e.error_flag).collect();
        assert_eq!(flagged, [false, true, false]);
        assert_eq!(entries[1].outcome, EntryOutcome::Repeated);
    }

    #[test]
    fn all_no_ends_green_after_eighteen_steps() {
        let (svc, _) = service();
        let (id, _) = svc.create_session().unwrap();
        let mut last = None;
        for seq in 1..=17 {
            last = Some(say(&svc, &id, seq, "no").unwrap());
        }
        let last = last.unwrap();
        assert!(last.ended);
        assert_eq!(last.zone, Some(Zone::SafeGreen));
        assert_eq!(last.steps_executed, 18);

        let entries = svc.store().entries_for(&id).unwrap();
        let advanced = entries
            .iter()
            .filter(|e| e.outcome == EntryOutcome::Advanced)
            .count();
        assert_eq!(advanced + 1, 18);
    }

    #[test]
    fn stop_abandons_without_zone() {
        let (svc, _) = service();
        let (id, _) = svc.create_session().unwrap();
        say(&svc, &id, 1, "no").unwrap();
        let resp = say(&svc, &id, 2, "stop").unwrap();
        assert!(resp.ended);
        assert_eq!(resp.zone, None);
        assert_eq!(resp.prompt, FAREWELL);
        let snap = svc.get_session(&id).unwrap();
        assert_eq!(snap.state.status, SessionStatus::Abandoned);
        assert!(snap.state.ended_at.is_some());
    }

    #[test]
    fn sequence_rules() {
        let (svc, _) = service();
        let (id, _) = svc.create_session().unwrap();
        assert!(matches!(
            say(&svc, &id, 2, "no"),
            Err(ServiceError::SequenceConflict {
                expected: 1,
                got: 2,
                ..
            })
        ));
        assert!(matches!(
            say(&svc, &id, 0, "no"),
            Err(ServiceError::SequenceConflict { .. })
        ));
        say(&svc, &id, 1, "no").unwrap();
        assert!(matches!(
            say(&svc, &id, 1, "no"),
            Err(ServiceError::SequenceConflict { .. })
        ));
        assert_eq!(svc.get_session(&id).unwrap().state.answers.len(), 1);
        assert_eq!(
            say(&svc, "nope", 1, "no").unwrap_err(),
            ServiceError::UnknownSession("nope".into())
        );
        assert_eq!(
            svc.get_session("nope").unwrap_err(),
            ServiceError::UnknownSession("nope".into())
        );
    }

    #[test]
    fn idle_sessions_are_abandoned() {
        let (svc, clock) = service();
        let (id, _) = svc.create_session().unwrap();
        clock.advance_millis(300_000);
        assert_eq!(svc.expire_idle(), 0);
        clock.advance_millis(1);
        assert_eq!(svc.expire_idle(), 1);
        assert_eq!(
            svc.get_session(&id).unwrap().state.status,
            SessionStatus::Abandoned
        );

        let (id, _) = svc.create_session().unwrap();
        clock.advance_millis(400_000);
        assert_eq!(
            say(&svc, &id, 1, "no").unwrap_err(),
            ServiceError::SessionEnded(id.clone())
        );
    }

    #[test]
    fn persist_is_idempotent() {
        let (svc, _) = service();
        let mut sink: Vec<TranscriptEntry> = Vec::new();
        assert_eq!(svc.persist_transcripts(&mut sink).unwrap(), 0);

        let (id, _) = svc.create_session().unwrap();
        for (seq, text) in ["no", "huh", "no", "no"].iter().enumerate() {
            say(&svc, &id, seq as u64 + 1, text).unwrap();
        }
        assert_eq!(svc.persist_transcripts(&mut sink).unwrap(), 5);
        let seqs: Vec<_> = sink.iter().map(|e| e.sequence).collect();
        assert_eq!(seqs, [0, 1, 2, 3, 4]);
        assert_eq!(svc.persist_transcripts(&mut sink).unwrap(), 0);
    }

    struct FailAfter(usize, Vec<TranscriptEntry>);

    impl TranscriptSink for FailAfter {
        fn contains(&self, s: &str, q: u64) -> bool {
            self.1.contains(s, q)
        }
        fn append(&mut self, e: &TranscriptEntry) -> Result<(), SinkError> {
            if self.1.len() == self.0 {
                return Err(std::io::Error::other("disk full").into());
            }
            TranscriptSink::append(&mut self.1, e)
        }
    }

    #[test]
    fn partial_persist_resumes_without_duplicates() {
        let (svc, _) = service();
        let (id, _) = svc.create_session().unwrap();
        for seq in 1..=4 {
            say(&svc, &id, seq, "no").unwrap();
        }
        let mut sink = FailAfter(2, Vec::new());
        assert!(svc.persist_transcripts(&mut sink).is_err());
        assert_eq!(sink.1.len(), 2);
        sink.0 = usize::MAX;
        assert_eq!(svc.persist_transcripts(&mut sink).unwrap(), 3);
        let seqs: Vec<_> = sink.1.iter().map(|e| e.sequence).collect();
        assert_eq!(seqs, [0, 1, 2, 3, 4]);
    }
}
