//! Rule-based language layer: text in, one discrete [`Intent`] out.
//!
//! Matching works on whole tokens. A phrase matches when its tokens occur as
//! a contiguous run in the utterance, so "i do" matches "yes i do" but not
//! "i dont". Stop, repeat, help and the wake phrase are checked before any
//! yes/no scanning.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LEXICON: &str = include_str!("../data/default_lexicon.json");

/// Text after normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Utterance {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Utterance {
    pub fn normalized(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases, deletes apostrophes, treats every other non-alphanumeric
/// character as whitespace and splits.
pub fn normalize(raw: &str) -> Utterance {
    let mut cleaned = String::with_capacity(raw.len());
    for c in raw.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            cleaned.push(c);
        } else if c != '\'' && c != '\u{2019}' {
            cleaned.push(' ');
        }
    }
    Utterance {
        raw: raw.to_owned(),
        tokens: cleaned.split_whitespace().map(str::to_owned).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Affirm,
    Deny,
    Repeat,
    Help,
    Wake,
    Stop,
    Unknown,
}

impl Intent {
    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Affirm => "affirm",
            Intent::Deny => "deny",
            Intent::Repeat => "repeat",
            Intent::Help => "help",
            Intent::Wake => "wake",
            Intent::Stop => "stop",
            Intent::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

type Phrase = Vec<String>;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon file does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("`{raw}` in the {set} set is empty after normalization")]
    EmptyPhrase { set: &'static str, raw: String },
    #[error("`{0}` is both an affirm and a deny phrase")]
    Overlap(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconDocument {
    affirm: Vec<String>,
    deny: Vec<String>,
    repeat: Vec<String>,
    help: Vec<String>,
    stop: Vec<String>,
}

/// Phrase sets, stored normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    affirm: Vec<Phrase>,
    deny: Vec<Phrase>,
    repeat: Vec<Phrase>,
    help: Vec<Phrase>,
    stop: Vec<Phrase>,
    wake: Option<Phrase>,
}

impl Lexicon {
    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let doc: LexiconDocument = serde_json::from_str(text)?;
        Self::new(&doc.affirm, &doc.deny, &doc.repeat, &doc.help, &doc.stop)
    }

    pub fn new<S: AsRef<str>>(
        affirm: &[S],
        deny: &[S],
        repeat: &[S],
        help: &[S],
        stop: &[S],
    ) -> Result<Self, LexiconError> {
        fn phrases<S: AsRef<str>>(
            set: &'static str,
            raw: &[S],
        ) -> Result<Vec<Phrase>, LexiconError> {
            let mut out: Vec<Phrase> = Vec::with_capacity(raw.len());
            for r in raw {
                let tokens = normalize(r.as_ref()).tokens;
                if tokens.is_empty() {
                    return Err(LexiconError::EmptyPhrase {
                        set,
                        raw: r.as_ref().to_owned(),
                    });
                }
                if !out.contains(&tokens) {
                    out.push(tokens);
                }
            }
            Ok(out)
        }
        let lexicon = Self {
            affirm: phrases("affirm", affirm)?,
            deny: phrases("deny", deny)?,
            repeat: phrases("repeat", repeat)?,
            help: phrases("help", help)?,
            stop: phrases("stop", stop)?,
            wake: None,
        };
        if let Some(p) = lexicon.affirm.iter().find(|p| lexicon.deny.contains(p)) {
            return Err(LexiconError::Overlap(p.join(" ")));
        }
        Ok(lexicon)
    }

    /// Adds the wake phrase so that it is recognized as [`Intent::Wake`].
    pub fn with_wake_phrase(mut self, phrase: &str) -> Self {
        let tokens = normalize(phrase).tokens;
        self.wake = (!tokens.is_empty()).then_some(tokens);
        self
    }

    pub fn wake_phrase(&self) -> Option<&[String]> {
        self.wake.as_deref()
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

/// Start offsets where `phrase` occurs as a contiguous token run.
fn occurrences<'a>(tokens: &'a [String], phrase: &'a [String]) -> impl Iterator<Item = usize> + 'a {
    tokens
        .windows(phrase.len())
        .enumerate()
        .filter(move |(_, w)| *w == phrase)
        .map(|(i, _)| i)
}

fn contains_any(tokens: &[String], set: &[Phrase]) -> bool {
    set.iter().any(|p| occurrences(tokens, p).next().is_some())
}

fn spans(tokens: &[String], set: &[Phrase]) -> Vec<(usize, usize)> {
    set.iter()
        .flat_map(|p| occurrences(tokens, p).map(move |i| (i, i + p.len())))
        .collect()
}

/// Maps an utterance to exactly one intent.
///
/// An affirm match that sits inside a deny match ("i do" in "i do not") or is
/// directly followed by one ("i have" + "not") is negated and dropped. After
/// that, affirm-only is [`Intent::Affirm`], deny-only is [`Intent::Deny`],
/// and both or neither is [`Intent::Unknown`].
pub fn match_intent(utterance: &Utterance, lexicon: &Lexicon) -> Intent {
    let tokens = &utterance.tokens;
    if tokens.is_empty() {
        return Intent::Unknown;
    }
    if contains_any(tokens, &lexicon.stop) {
        return Intent::Stop;
    }
    if contains_any(tokens, &lexicon.repeat) {
        return Intent::Repeat;
    }
    if contains_any(tokens, &lexicon.help) {
        return Intent::Help;
    }
    if let Some(wake) = &lexicon.wake {
        if detect_wake(utterance, wake) {
            return Intent::Wake;
        }
    }

    let deny = spans(tokens, &lexicon.deny);
    let affirmed = spans(tokens, &lexicon.affirm)
        .into_iter()
        .any(|(start, end)| {
            !deny
                .iter()
                .any(|&(ds, de)| (ds <= start && end <= de) || ds == end)
        });
    match (affirmed, !deny.is_empty()) {
        (true, false) => Intent::Affirm,
        (false, true) => Intent::Deny,
        _ => Intent::Unknown,
    }
}

/// True when the wake phrase occurs as a contiguous token run.
pub fn detect_wake(utterance: &Utterance, wake: &[String]) -> bool {
    !wake.is_empty() && occurrences(&utterance.tokens, wake).next().is_some()
}
