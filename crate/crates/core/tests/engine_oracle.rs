//! The engine against the `classify` oracle over every answer assignment.

use triage_core::triage::{classify, enumerate_paths, Answer, StepOutcome, TriageProtocol, Zone};
use triage_core::{ManualClock, SessionState};

fn replay(protocol: &TriageProtocol, bits: u32) -> (Vec<SessionState>, Option<Zone>) {
    let clock = ManualClock::fixed();
    let (mut state, _) = protocol.start_session("oracle", &clock);
    let mut states = vec![state.clone()];
    for i in 0..17 {
        let answer = if bits >> i & 1 == 1 {
            Answer::Yes
        } else {
            Answer::No
        };
        clock.advance_millis(1_500);
        let (next, outcome) = protocol.advance(state, answer, &clock).unwrap();
        state = next;
        states.push(state.clone());
        if let StepOutcome::Final(rec) = outcome {
            return (states, Some(rec.zone));
        }
    }
    (states, None)
}

#[test]
fn every_assignment_agrees_with_classify() {
    let protocol = TriageProtocol::default_protocol();
    for bits in 0..(1u32 << 17) {
        let (states, zone) = replay(&protocol, bits);
        let last = states.last().unwrap();
        let zone = zone.expect("every assignment reaches a terminal");
        assert_eq!(
            classify(&last.answers, &protocol).unwrap(),
            zone,
            "bits {bits:017b}"
        );
        assert!((2..=18).contains(&last.steps_executed));
        // the realized prefix ends at the first yes, if any
        let first_yes = (0..17).find(|i| bits >> i & 1 == 1);
        assert_eq!(last.answers.len(), first_yes.map_or(17, |i| i + 1));
    }
}

#[test]
fn replay_is_deterministic() {
    let protocol = TriageProtocol::default_protocol();
    for bits in [0u32, 1, 0b100_0000_0000_0000, 0b1_0000_0000_0000_0000] {
        let (a, _) = replay(&protocol, bits);
        let (b, _) = replay(&protocol, bits);
        let bytes = |s: &[SessionState]| serde_json::to_vec(s).unwrap();
        assert_eq!(bytes(&a), bytes(&b));
    }
}

#[test]
fn recommendation_is_most_severe_yes() {
    let protocol = TriageProtocol::default_protocol();
    for path in enumerate_paths(&protocol) {
        let worst = path
            .answers
            .iter()
            .filter(|a| a.answer == Answer::Yes)
            .map(|a| protocol.step(&a.step_id).unwrap().zone)
            .max()
            .unwrap_or(Zone::SafeGreen);
        assert_eq!(path.zone, worst);
        let yes_at = path.answers.iter().position(|a| a.answer == Answer::Yes);
        if let Some(i) = yes_at {
            assert_eq!(i, path.answers.len() - 1, "first yes must end the path");
        }
    }
}
