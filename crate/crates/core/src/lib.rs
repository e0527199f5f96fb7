//! Deterministic yes/no self-assessment triage.
//!
//! The crate is split along the same lines as the running system:
//!
//! - [`triage`]: the protocol graph, its validator and the pure session engine.
//! - [`nlu`]: text normalization and the rule-based intent matcher.
//! - [`service`]: the session store, transcript sink and REST router.
//! - [`metrics`]: workload scoring, summary statistics and item characteristic curves.
//! - [`sim`]: synthetic participants driven through the service path.

pub mod clock;
pub mod metrics;
pub mod nlu;
pub mod service;
pub mod sim;
pub mod triage;

pub use clock::{Clock, ManualClock, SystemClock};
pub use metrics::{IccModel, SessionSummary, StatSummary, StatsReport, TlxRecord, TlxScore};
pub use nlu::{Intent, Lexicon, Utterance};
pub use service::{IntentRequest, IntentResponse, SessionStore, TranscriptEntry, TriageService};
pub use triage::{
    Answer, Edge, PathRecord, Recommendation, SessionState, SessionStatus, StepNode, StepOutcome,
    TriageProtocol, Zone,
};
