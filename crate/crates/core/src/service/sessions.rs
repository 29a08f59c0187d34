use std::collections::HashMap;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::dialogue::DialogueSession;

/// One logged turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub at: DateTime<Utc>,
    pub user: String,
    pub intent: String,
    pub confidence: f64,
    pub text: String,
}

#[derive(Debug)]
pub struct SessionEntry {
    pub session: DialogueSession,
    pub transcript: Vec<TranscriptEntry>,
}

pub type SessionHandle = Arc<tokio::sync::Mutex<SessionEntry>>;

/// Concurrent session map. Each session sits behind its own async mutex so
/// turns of one session run one at a time while other sessions proceed.
#[derive(Debug)]
pub struct SessionStore {
    sessions: parking_lot::Mutex<HashMap<String, (SessionHandle, DateTime<Utc>)>>,
    idle: Duration,
}

impl SessionStore {
    pub fn new(idle: Duration) -> Self {
        Self { sessions: parking_lot::Mutex::new(HashMap::new()), idle }
    }

    pub fn insert(&self, session: DialogueSession) -> SessionHandle {
        let id = session.session_id.clone();
        let touched = session.last_active;
        let handle = Arc::new(tokio::sync::Mutex::new(SessionEntry { session, transcript: Vec::new() }));
        self.sessions.lock().insert(id, (handle.clone(), touched));
        handle
    }

    /// Live session by id; an expired one is dropped and reported missing.
    pub fn get(&self, id: &str, now: DateTime<Utc>) -> Option<SessionHandle> {
        let mut map = self.sessions.lock();
        let (handle, touched) = map.get_mut(id)?;
        if now - *touched > self.idle {
            map.remove(id);
            return None;
        }
        *touched = now;
        Some(handle.clone())
    }

    pub fn remove(&self, id: &str) -> bool {
        self.sessions.lock().remove(id).is_some()
    }

    /// Drops every session idle for longer than the timeout; returns how many.
    pub fn expire(&self, now: DateTime<Utc>) -> usize {
        let mut map = self.sessions.lock();
        let before = map.len();
        map.retain(|_, (_, touched)| now - *touched <= self.idle);
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
