use serde::Serialize;

use super::engine::AnswerRecord;
use super::protocol::{Edge, TriageProtocol};
use super::zone::{Answer, Zone};

/// One complete walk from the first question to a terminal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathRecord {
    pub answers: Vec<AnswerRecord>,
    pub steps_executed: u32,
    pub terminal_id: String,
    pub zone: Zone,
}

/// Every distinct root-to-terminal path, in depth-first order with "yes"
/// explored before "no".
pub fn enumerate_paths(protocol: &TriageProtocol) -> Vec<PathRecord> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    walk(protocol, &protocol.first_step().id, &mut prefix, &mut out);
    out
}

fn walk(
    protocol: &TriageProtocol,
    step_id: &str,
    prefix: &mut Vec<AnswerRecord>,
    out: &mut Vec<PathRecord>,
) {
    let step = protocol.step(step_id).expect("validated edge");
    for answer in [Answer::Yes, Answer::No] {
        prefix.push(AnswerRecord {
            step_id: step.id.clone(),
            answer,
        });
        match step.edge(answer) {
            Edge::Next(next) => walk(protocol, next, prefix, out),
            Edge::Terminal(id) => {
                let terminal = protocol.terminal(id).expect("validated edge");
                out.push(PathRecord {
                    answers: prefix.clone(),
                    steps_executed: prefix.len() as u32 + 1,
                    terminal_id: id.clone(),
                    zone: terminal.zone,
                });
            }
        }
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triage::classify;

    #[test]
    fn single_question_protocol_has_two_paths() {
        let doc = serde_json::json!({
            "version": 1, "wake_word": "hey",
            "steps": [{"id": "q", "zone": "red_alert", "prompt": "?", "suggested_answers": ["yes", "no"],
                       "on_yes": {"terminal": "r"}, "on_no": {"terminal": "g"}}],
            "terminals": {
                "r": {"zone": "red_alert", "exposure_variant": false, "message": "911"},
                "y": {"zone": "mild_yellow", "exposure_variant": false, "message": "home"},
                "g": {"zone": "safe_green", "exposure_variant": false, "message": "ok"}
            }
        });
        let p = TriageProtocol::load(&doc.to_string()).unwrap();
        let paths = enumerate_paths(&p);
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].zone, Zone::RedAlert);
        assert_eq!(paths[1].zone, Zone::SafeGreen);
        assert!(paths.iter().all(|p| p.steps_executed == 2));
    }

    #[test]
    fn default_protocol_paths_agree_with_classify() {
        let p = TriageProtocol::default_protocol();
        let paths = enumerate_paths(&p);
        assert_eq!(paths.len(), 18);
        for path in &paths {
            assert_eq!(classify(&path.answers, &p).unwrap(), path.zone);
            assert!((2..=18).contains(&path.steps_executed));
        }
    }
}
