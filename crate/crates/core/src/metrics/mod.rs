//! Post-hoc analysis: workload scores, summary statistics over session
//! logs, and item characteristic curves.

mod icc;
mod stats;
mod tlx;

use thiserror::Error;

pub use icc::{write_curve_csv, IccModel};
pub use stats::{session_summaries, summarize, SessionSummary, StatSummary, StatsReport};
pub use tlx::{read_tlx_csv, tlx_score, TlxRecord, TlxScore, SUBSCALE_MAX, SUBSCALE_MIN};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{field} = {value} is outside [1, 21] for participant `{participant}`")]
    Range {
        participant: String,
        field: &'static str,
        value: i64,
    },
    #[error("no values to summarize")]
    EmptyInput,
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: session `{session_id}` sequence {sequence} does not follow {previous}")]
    OutOfOrder {
        line: usize,
        session_id: String,
        sequence: u64,
        previous: u64,
    },
    #[error("discrimination must be a positive finite number, got {0}")]
    BadDiscrimination(f64),
    #[error("bad curve range: need finite theta_min < theta_max and at least 2 points")]
    BadRange,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
