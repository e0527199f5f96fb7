use std::io::BufRead;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::nlu::Intent;
use crate::service::{EntryOutcome, TranscriptEntry};
use crate::triage::SessionState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    pub median: f64,
    pub mode: f64,
}

/// Mean, median (mean of the middle two for even lengths) and mode (the
/// smallest of the most frequent values).
pub fn summarize(values: &[f64]) -> Result<StatSummary, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };

    let (mut mode, mut best) = (sorted[0], 0);
    for run in sorted.chunk_by(|a, b| a.total_cmp(b).is_eq()) {
        if run.len() > best {
            best = run.len();
            mode = run[0];
        }
    }
    Ok(StatSummary { mean, median, mode })
}

/// Per-session (time, errors, steps) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub duration_s: f64,
    pub errors: u32,
    pub steps_executed: u32,
}

impl SessionSummary {
    /// Summary straight from a live session: first to last activity.
    pub fn from_state(state: &SessionState) -> Self {
        Self {
            session_id: state.session_id.clone(),
            duration_s: millis_to_secs(
                (state.last_activity_at - state.started_at).num_milliseconds(),
            ),
            errors: state.error_count,
            steps_executed: state.steps_executed,
        }
    }
}

fn millis_to_secs(ms: i64) -> f64 {
    ms as f64 / 1000.0
}

/// Rebuilds per-session summaries from a JSONL transcript. Sessions come
/// out in order of first appearance.
///
/// Steps are the entries that moved the session forward: every `advanced`
/// entry (including the opening wake entry) plus an `ended` entry that
/// reached a recommendation. A `stop` ending executes no step.
pub fn session_summaries(reader: impl BufRead) -> Result<Vec<SessionSummary>, MetricsError> {
    struct Acc {
        first: TranscriptEntry,
        last: TranscriptEntry,
        errors: u32,
        steps: u32,
    }

    let mut sessions: IndexMap<String, Acc> = IndexMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: TranscriptEntry =
            serde_json::from_str(&line).map_err(|e| MetricsError::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        let errors = u32::from(entry.error_flag);
        let steps = match entry.outcome {
            EntryOutcome::Advanced => 1,
            EntryOutcome::Ended if entry.intent != Intent::Stop => 1,
            _ => 0,
        };
        match sessions.get_mut(&entry.session_id) {
            Some(acc) => {
                if entry.sequence <= acc.last.sequence {
                    return Err(MetricsError::OutOfOrder {
                        line: line_no,
                        session_id: entry.session_id,
                        sequence: entry.sequence,
                        previous: acc.last.sequence,
                    });
                }
                acc.errors += errors;
                acc.steps += steps;
                acc.last = entry;
            }
            None => {
                sessions.insert(
                    entry.session_id.clone(),
                    Acc {
                        first: entry.clone(),
                        last: entry,
                        errors,
                        steps,
                    },
                );
            }
        }
    }

    Ok(sessions
        .into_iter()
        .map(|(session_id, acc)| SessionSummary {
            session_id,
            duration_s: millis_to_secs(
                (acc.last.timestamp - acc.first.timestamp).num_milliseconds(),
            ),
            errors: acc.errors,
            steps_executed: acc.steps,
        })
        .collect())
}

/// Mean/median/mode of time, errors and steps over a set of sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub time_s: StatSummary,
    pub errors: StatSummary,
    pub steps_executed: StatSummary,
    pub n_sessions: usize,
}

impl StatsReport {
    pub fn from_summaries(summaries: &[SessionSummary]) -> Result<Self, MetricsError> {
        let column = |f: fn(&SessionSummary) -> f64| summaries.iter().map(f).collect::<Vec<_>>();
        Ok(Self {
            time_s: summarize(&column(|s| s.duration_s))?,
            errors: summarize(&column(|s| s.errors.into()))?,
            steps_executed: summarize(&column(|s| s.steps_executed.into()))?,
            n_sessions: summaries.len(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference implementation by counting, kept deliberately naive.
    fn brute(values: &[i64]) -> (f64, f64, i64) {
        let mean = values.iter().sum::<i64>() as f64 / values.len() as f64;
        // median: value(s) with at most half below and at most half above
        let n = values.len();
        let kth = |k: usize| {
            *values
                .iter()
                .find(|&&v| {
                    let below = values.iter().filter(|&&w| w < v).count();
                    let at = values.iter().filter(|&&w| w == v).count();
                    below <= k && k < below + at
                })
                .unwrap()
        };
        let median = if n % 2 == 1 {
            kth(n / 2) as f64
        } else {
            (kth(n / 2 - 1) + kth(n / 2)) as f64 / 2.0
        };
        let lo = *values.iter().min().unwrap();
        let hi = *values.iter().max().unwrap();
        let mut mode = lo;
        let mut best = 0;
        for v in lo..=hi {
            let c = values.iter().filter(|&&w| w == v).count();
            if c > best {
                best = c;
                mode = v;
            }
        }
        (mean, median, mode)
    }

    fn floats(v: &[i64]) -> Vec<f64> {
        v.iter().map(|&x| x as f64).collect()
    }

    #[test]
    fn examples() {
        let s = summarize(&[5.0]).unwrap();
        assert_eq!((s.mean, s.median, s.mode), (5.0, 5.0, 5.0));
        let s = summarize(&[1.0, 2.0, 2.0, 9.0]).unwrap();
        assert_eq!((s.mean, s.median, s.mode), (3.5, 2.0, 2.0));
        let s = summarize(&[3.0, 1.0, 3.0, 1.0]).unwrap();
        assert_eq!(s.mode, 1.0);
        assert!(matches!(summarize(&[]), Err(MetricsError::EmptyInput)));
    }

    #[test]
    fn transcript_errors() {
        let good = r#"{"session_id":"a","timestamp":"2020-07-05T00:00:00Z","sequence":0,"step_id":"q","utterance":"ask coronavirus","intent":"wake","outcome":"advanced","error_flag":false}"#;
        let text = format!("{good}\nnot json\n");
        assert!(matches!(
            session_summaries(text.as_bytes()),
            Err(MetricsError::MalformedRecord { line: 2, .. })
        ));
        let text = format!("{good}\n{good}\n");
        assert!(matches!(
            session_summaries(text.as_bytes()),
            Err(MetricsError::OutOfOrder { line: 2, .. })
        ));
        assert!(session_summaries("".as_bytes()).unwrap().is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matches_brute_force(values in prop::collection::vec(-20i64..20, 1..30)) {
            let s = summarize(&floats(&values)).unwrap();
            let (mean, median, mode) = brute(&values);
            prop_assert!((s.mean - mean).abs() < 1e-9);
            prop_assert_eq!(s.median, median);
            prop_assert_eq!(s.mode, mode as f64);
        }

        #[test]
        fn permutation_invariant(
            (values, shuffled) in prop::collection::vec(0i64..50, 1..30)
                .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle()))
        ) {
            let a = summarize(&floats(&values)).unwrap();
            let b = summarize(&floats(&shuffled)).unwrap();
            prop_assert_eq!(a.median, b.median);
            prop_assert_eq!(a.mode, b.mode);
            prop_assert!((a.mean - b.mean).abs() < 1e-9);
            let lo = *values.iter().min().unwrap() as f64;
            let hi = *values.iter().max().unwrap() as f64;
            prop_assert!(lo <= a.median && a.median <= hi);
            prop_assert!(values.iter().any(|&v| v as f64 == a.mode));
        }
    }
}
