//! The self-assessment protocol and the pure session engine that walks it.

mod engine;
mod paths;
mod protocol;
mod zone;

pub use engine::{
    classify, AnswerRecord, EngineError, Position, SessionState, SessionStatus, StepOutcome,
};
pub use paths::{enumerate_paths, PathRecord};
pub use protocol::{
    Edge, ProtocolError, Recommendation, StepNode, TriageProtocol, ValidationReason,
    DEFAULT_PROTOCOL,
};
pub use zone::{Answer, Zone};
