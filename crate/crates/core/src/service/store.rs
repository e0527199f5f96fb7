use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use indexmap::IndexMap;
use parking_lot::{Mutex, RwLock};

use super::transcript::TranscriptEntry;
use super::IntentResponse;
use crate::triage::SessionState;

#[derive(Debug)]
pub(crate) struct SessionSlot {
    pub state: SessionState,
    pub last_sequence: u64,
    pub entries: Vec<TranscriptEntry>,
    pub last_response: IntentResponse,
}

/// In-memory sessions plus their transcripts, in creation order.
///
/// The map lock is only held long enough to find a slot; each session has
/// its own mutex so distinct sessions proceed in parallel while requests for
/// one session are serialized.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<IndexMap<String, Arc<Mutex<SessionSlot>>>>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the id is already taken.
    pub(crate) fn insert(&self, slot: SessionSlot) -> bool {
        let mut sessions = self.sessions.write();
        let id = slot.state.session_id.clone();
        if sessions.contains_key(&id) {
            return false;
        }
        sessions.insert(id, Arc::new(Mutex::new(slot)));
        true
    }

    pub(crate) fn slot(&self, session_id: &str) -> Option<Arc<Mutex<SessionSlot>>> {
        self.sessions.read().get(session_id).cloned()
    }

    fn slots(&self) -> Vec<Arc<Mutex<SessionSlot>>> {
        self.sessions.read().values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, session_id: &str) -> Option<SessionState> {
        self.slot(session_id).map(|s| s.lock().state.clone())
    }

    pub fn states(&self) -> Vec<SessionState> {
        self.slots()
            .iter()
            .map(|s| s.lock().state.clone())
            .collect()
    }

    /// All transcript entries, session by session, each in sequence order.
    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.slots()
            .iter()
            .flat_map(|s| s.lock().entries.clone())
            .collect()
    }

    pub fn entries_for(&self, session_id: &str) -> Option<Vec<TranscriptEntry>> {
        self.slot(session_id).map(|s| s.lock().entries.clone())
    }

    /// Marks active sessions idle for longer than `timeout` as abandoned.
    pub fn expire_idle(&self, now: DateTime<Utc>, timeout: Duration) -> usize {
        let mut expired = 0;
        for slot in self.slots() {
            let mut slot = slot.lock();
            if slot.state.is_active() && now - slot.state.last_activity_at > timeout {
                slot.state.abandon(now);
                expired += 1;
            }
        }
        expired
    }
}
