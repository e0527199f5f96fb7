use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::zone::{Answer, Zone};
use crate::nlu;

/// The bundled seventeen-question protocol.
pub const DEFAULT_PROTOCOL: &str = include_str!("../../data/default_protocol.json");

/// Where an answer leads: another question or a terminal recommendation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Next(String),
    Terminal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepNode {
    pub id: String,
    pub zone: Zone,
    pub prompt: String,
    pub suggested_answers: Vec<String>,
    pub on_yes: Edge,
    pub on_no: Edge,
}

impl StepNode {
    pub fn edge(&self, answer: Answer) -> &Edge {
        match answer {
            Answer::Yes => &self.on_yes,
            Answer::No => &self.on_no,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub terminal_id: String,
    pub zone: Zone,
    pub exposure_variant: bool,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValidationReason {
    Cycle,
    DanglingEdge,
    UnreachableStep,
    MissingTerminal,
    ZoneOrderViolation,
    DuplicateId,
    EmptySuggestedAnswers,
    NoSteps,
}

impl ValidationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationReason::Cycle => "cycle",
            ValidationReason::DanglingEdge => "dangling-edge",
            ValidationReason::UnreachableStep => "unreachable-step",
            ValidationReason::MissingTerminal => "missing-terminal",
            ValidationReason::ZoneOrderViolation => "zone-order-violation",
            ValidationReason::DuplicateId => "duplicate-id",
            ValidationReason::EmptySuggestedAnswers => "empty-suggested-answers",
            ValidationReason::NoSteps => "no-steps",
        }
    }
}

impl fmt::Display for ValidationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("protocol document does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("wake word is empty after normalization")]
    EmptyWakeWord,
    #[error("invalid protocol ({reason}): {detail}")]
    Validation {
        reason: ValidationReason,
        detail: String,
    },
}

impl ProtocolError {
    pub fn reason(&self) -> Option<ValidationReason> {
        match self {
            ProtocolError::Validation { reason, .. } => Some(*reason),
            _ => None,
        }
    }
}

fn invalid(reason: ValidationReason, detail: impl Into<String>) -> ProtocolError {
    ProtocolError::Validation {
        reason,
        detail: detail.into(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolDocument {
    version: u32,
    wake_word: String,
    steps: Vec<StepNode>,
    terminals: BTreeMap<String, TerminalDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerminalDocument {
    zone: Zone,
    exposure_variant: bool,
    message: String,
}

/// A validated, immutable question graph.
#[derive(Debug, Clone)]
pub struct TriageProtocol {
    version: u32,
    wake_word: String,
    steps: Vec<StepNode>,
    index: HashMap<String, usize>,
    terminals: BTreeMap<String, Recommendation>,
}

impl TriageProtocol {
    /// Parses and validates a protocol document.
    pub fn load(document: &str) -> Result<Self, ProtocolError> {
        let doc: ProtocolDocument = serde_json::from_str(document)?;
        let wake_tokens = nlu::normalize(&doc.wake_word).tokens;
        if wake_tokens.is_empty() {
            return Err(ProtocolError::EmptyWakeWord);
        }
        let terminals = doc
            .terminals
            .into_iter()
            .map(|(id, t)| {
                let rec = Recommendation {
                    terminal_id: id.clone(),
                    zone: t.zone,
                    exposure_variant: t.exposure_variant,
                    message: t.message,
                };
                (id, rec)
            })
            .collect();
        let protocol = Self::from_parts(doc.version, wake_tokens.join(" "), doc.steps, terminals)?;
        Ok(protocol)
    }

    /// The protocol shipped with the crate.
    pub fn default_protocol() -> Self {
        Self::load(DEFAULT_PROTOCOL).expect("bundled protocol is valid")
    }

    /// Builds a protocol from already-parsed parts, running the full validator.
    pub fn from_parts(
        version: u32,
        wake_word: String,
        steps: Vec<StepNode>,
        terminals: BTreeMap<String, Recommendation>,
    ) -> Result<Self, ProtocolError> {
        let mut index = HashMap::with_capacity(steps.len());
        for (i, step) in steps.iter().enumerate() {
            if index.insert(step.id.clone(), i).is_some() || terminals.contains_key(&step.id) {
                return Err(invalid(
                    ValidationReason::DuplicateId,
                    format!("id `{}` is used more than once", step.id),
                ));
            }
        }
        let protocol = Self {
            version,
            wake_word,
            steps,
            index,
            terminals,
        };
        protocol.validate()?;
        Ok(protocol)
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// Normalized wake phrase, tokens joined by single spaces.
    pub fn wake_word(&self) -> &str {
        &self.wake_word
    }

    pub fn steps(&self) -> &[StepNode] {
        &self.steps
    }

    pub fn first_step(&self) -> &StepNode {
        &self.steps[0]
    }

    pub fn step(&self, id: &str) -> Option<&StepNode> {
        self.index.get(id).map(|&i| &self.steps[i])
    }

    pub fn terminal(&self, id: &str) -> Option<&Recommendation> {
        self.terminals.get(id)
    }

    pub fn terminals(&self) -> impl Iterator<Item = &Recommendation> {
        self.terminals.values()
    }

    /// Serializes back to the document format.
    pub fn to_document(&self) -> serde_json::Value {
        let terminals: BTreeMap<&str, TerminalDocument> = self
            .terminals
            .values()
            .map(|r| {
                (
                    r.terminal_id.as_str(),
                    TerminalDocument {
                        zone: r.zone,
                        exposure_variant: r.exposure_variant,
                        message: r.message.clone(),
                    },
                )
            })
            .collect();
        serde_json::json!({
            "version": self.version,
            "wake_word": self.wake_word,
            "steps": self.steps,
            "terminals": terminals,
        })
    }

    /// Steps visited when every question is answered "no", followed by the
    /// terminal the path ends at.
    pub fn all_no_path(&self) -> (Vec<&StepNode>, &Recommendation) {
        let mut visited = Vec::new();
        let mut step = self.first_step();
        loop {
            visited.push(step);
            match &step.on_no {
                Edge::Next(id) => step = self.step(id).expect("validated edge"),
                Edge::Terminal(id) => return (visited, self.terminal(id).expect("validated edge")),
            }
        }
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        use ValidationReason::*;

        if self.steps.is_empty() {
            return Err(invalid(NoSteps, "protocol has no steps"));
        }
        for step in &self.steps {
            if step.suggested_answers.is_empty() {
                return Err(invalid(
                    EmptySuggestedAnswers,
                    format!("step `{}` offers no suggested answers", step.id),
                ));
            }
            for edge in [&step.on_yes, &step.on_no] {
                let ok = match edge {
                    Edge::Next(id) => self.index.contains_key(id),
                    Edge::Terminal(id) => self.terminals.contains_key(id),
                };
                if !ok {
                    return Err(invalid(
                        DanglingEdge,
                        format!("step `{}` points at unknown id {edge:?}", step.id),
                    ));
                }
            }
        }

        self.check_acyclic()?;

        let mut seen = vec![false; self.steps.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for edge in [&self.steps[i].on_yes, &self.steps[i].on_no] {
                if let Edge::Next(id) = edge {
                    let j = self.index[id];
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(invalid(
                UnreachableStep,
                format!(
                    "step `{}` cannot be reached from the first step",
                    self.steps[i].id
                ),
            ));
        }

        for zone in Zone::ALL {
            if !self.terminals.values().any(|t| t.zone == zone) {
                return Err(invalid(
                    MissingTerminal,
                    format!("no terminal for zone {zone}"),
                ));
            }
        }

        for step in &self.steps {
            if step.zone == Zone::RedAlert {
                let stops = matches!(&step.on_yes, Edge::Terminal(id) if self.terminals[id].zone == Zone::RedAlert);
                if !stops {
                    return Err(invalid(
                        ZoneOrderViolation,
                        format!(
                            "red-alert step `{}` must end at a red-alert terminal on yes",
                            step.id
                        ),
                    ));
                }
            }
        }

        let (path, _) = self.all_no_path();
        for pair in path.windows(2) {
            if pair[1].zone > pair[0].zone {
                return Err(invalid(
                    ZoneOrderViolation,
                    format!(
                        "step `{}` ({}) follows less severe step `{}` ({})",
                        pair[1].id, pair[1].zone, pair[0].id, pair[0].zone
                    ),
                ));
            }
        }

        self.check_terminal_zones()
    }

    fn check_acyclic(&self) -> Result<(), ProtocolError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let mut marks = vec![Mark::New; self.steps.len()];
        for root in 0..self.steps.len() {
            if marks[root] != Mark::New {
                continue;
            }
            // (node, next child to visit)
            let mut stack = vec![(root, 0usize)];
            marks[root] = Mark::Open;
            while let Some(&mut (node, ref mut child)) = stack.last_mut() {
                let step = &self.steps[node];
                let edge = match *child {
                    0 => Some(&step.on_yes),
                    1 => Some(&step.on_no),
                    _ => None,
                };
                *child += 1;
                match edge {
                    Some(Edge::Next(id)) => {
                        let next = self.index[id];
                        match marks[next] {
                            Mark::Open => {
                                return Err(invalid(
                                    ValidationReason::Cycle,
                                    format!("edge `{}` -> `{}` closes a cycle", step.id, id),
                                ))
                            }
                            Mark::New => {
                                marks[next] = Mark::Open;
                                stack.push((next, 0));
                            }
                            Mark::Done => {}
                        }
                    }
                    Some(Edge::Terminal(_)) => {}
                    None => {
                        marks[node] = Mark::Done;
                        stack.pop();
                    }
                }
            }
        }
        Ok(())
    }

    /// Every terminal must carry the most severe zone among the yes-answered
    /// steps on any path into it (green when there are none). Tracked as the
    /// set of reachable (step, severity-so-far) pairs, which stays linear in
    /// the number of steps.
    fn check_terminal_zones(&self) -> Result<(), ProtocolError> {
        let mut seen: HashSet<(usize, Zone)> = HashSet::new();
        let mut queue = VecDeque::from([(0usize, Zone::SafeGreen)]);
        seen.insert((0, Zone::SafeGreen));
        while let Some((i, worst)) = queue.pop_front() {
            let step = &self.steps[i];
            for answer in [Answer::Yes, Answer::No] {
                let worst = match answer {
                    Answer::Yes => worst.max(step.zone),
                    Answer::No => worst,
                };
                match step.edge(answer) {
                    Edge::Next(id) => {
                        let j = self.index[id];
                        if seen.insert((j, worst)) {
                            queue.push_back((j, worst));
                        }
                    }
                    Edge::Terminal(id) => {
                        let terminal = &self.terminals[id];
                        if terminal.zone != worst {
                            return Err(invalid(
                                ValidationReason::ZoneOrderViolation,
                                format!(
                                    "terminal `{id}` is {} but is reached from `{}` with severity {worst}",
                                    terminal.zone, step.id
                                ),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
