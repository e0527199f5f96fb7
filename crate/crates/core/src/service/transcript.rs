use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nlu::Intent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryOutcome {
    Advanced,
    Repeated,
    Ended,
}

/// One line of the append-only session log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptEntry {
    pub session_id: String,
    pub timestamp: DateTime<Utc>,
    pub sequence: u64,
    pub step_id: String,
    pub utterance: String,
    pub intent: Intent,
    pub outcome: EntryOutcome,
    pub error_flag: bool,
}

impl TranscriptEntry {
    pub fn key(&self) -> (&str, u64) {
        (&self.session_id, self.sequence)
    }

    pub fn to_json_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("entry serializes");
        line.push('\n');
        line
    }
}

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("transcript sink I/O failed: {0}")]
    Io(#[from] io::Error),
}

/// Append-only destination for transcript entries, keyed by
/// `(session_id, sequence)`.
pub trait TranscriptSink {
    fn contains(&self, session_id: &str, sequence: u64) -> bool;
    fn append(&mut self, entry: &TranscriptEntry) -> Result<(), SinkError>;
}

impl TranscriptSink for Vec<TranscriptEntry> {
    fn contains(&self, session_id: &str, sequence: u64) -> bool {
        self.iter().any(|e| e.key() == (session_id, sequence))
    }

    fn append(&mut self, entry: &TranscriptEntry) -> Result<(), SinkError> {
        self.push(entry.clone());
        Ok(())
    }
}

/// JSON-lines file sink. Keys already present in the file are loaded on
/// open so that re-persisting never duplicates a record.
#[derive(Debug)]
pub struct JsonlSink {
    path: PathBuf,
    file: File,
    written: HashSet<(String, u64)>,
    needs_newline: bool,
}

#[derive(Deserialize)]
struct EntryKey {
    session_id: String,
    sequence: u64,
}

impl JsonlSink {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, SinkError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)?;

        let mut written = HashSet::new();
        let mut reader = BufReader::new(&mut file);
        let mut line = String::new();
        let mut last_byte = None;
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            last_byte = line.as_bytes().last().copied();
            // A torn trailing line from an interrupted write is left in place.
            if let Ok(key) = serde_json::from_str::<EntryKey>(&line) {
                written.insert((key.session_id, key.sequence));
            }
        }
        drop(reader);
        file.seek(SeekFrom::End(0))?;
        Ok(Self {
            path,
            file,
            written,
            needs_newline: matches!(last_byte, Some(b) if b != b'\n'),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.written.len()
    }

    pub fn is_empty(&self) -> bool {
        self.written.is_empty()
    }
}

impl TranscriptSink for JsonlSink {
    fn contains(&self, session_id: &str, sequence: u64) -> bool {
        self.written.contains(&(session_id.to_owned(), sequence))
    }

    fn append(&mut self, entry: &TranscriptEntry) -> Result<(), SinkError> {
        let mut line = entry.to_json_line();
        if self.needs_newline {
            line.insert(0, '\n');
        }
        // Single write per record so a crash leaves at most one torn line.
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.needs_newline = false;
        self.written
            .insert((entry.session_id.clone(), entry.sequence));
        Ok(())
    }
}

/// Reads a whole JSONL transcript file into entries, for tests and tooling.
pub fn read_jsonl(mut reader: impl Read) -> Result<Vec<TranscriptEntry>, serde_json::Error> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(serde_json::Error::io)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
