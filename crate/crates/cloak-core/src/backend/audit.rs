//! Append-only audit log of every completed backend exchange.
//!
//! The log is the ground truth for the trust-boundary check: if raw
//! entity text ever reaches a public endpoint, it shows up here.

use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{ChatMessage, SpaceLabel};
use crate::Result;

/// One completed exchange: the full outbound transcript and the reply.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditEntry {
    pub timestamp: String,
    pub space: SpaceLabel,
    pub backend: String,
    pub request: Vec<ChatMessage>,
    pub response: String,
}

impl AuditEntry {
    /// All outbound text of this entry, concatenated for scanning.
    pub fn outbound_text(&self) -> String {
        let mut out = String::new();
        for m in &self.request {
            out.push_str(&m.content);
            out.push('\n');
        }
        out
    }
}

/// Shared in-memory log, optionally mirrored to a newline-delimited JSON
/// file. Entries are appended exactly once per successful completion.
pub struct AuditLog {
    entries: Mutex<Vec<AuditEntry>>,
    sink: Option<Mutex<std::fs::File>>,
}

impl AuditLog {
    pub fn in_memory() -> Arc<Self> {
        Arc::new(Self { entries: Mutex::new(Vec::new()), sink: None })
    }

    /// Also append each entry as one JSON line to the given file.
    pub fn with_sink(path: &Path) -> Result<Arc<Self>> {
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Arc::new(Self {
            entries: Mutex::new(Vec::new()),
            sink: Some(Mutex::new(file)),
        }))
    }

    pub fn record(
        &self,
        space: SpaceLabel,
        backend: &str,
        request: &[ChatMessage],
        response: &str,
    ) {
        let entry = AuditEntry {
            timestamp: chrono::Utc::now().to_rfc3339(),
            space,
            backend: backend.to_string(),
            request: request.to_vec(),
            response: response.to_string(),
        };
        if let Some(sink) = &self.sink {
            if let Ok(line) = serde_json::to_string(&entry) {
                let mut file = sink.lock().unwrap();
                let _ = writeln!(file, "{line}");
            }
        }
        self.entries.lock().unwrap().push(entry);
    }

    pub fn snapshot(&self) -> Vec<AuditEntry> {
        self.entries.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of entries recorded by the named backend.
    pub fn count_for(&self, backend: &str) -> usize {
        self.entries
            .lock()
            .unwrap()
            .iter()
            .filter(|e| e.backend == backend)
            .count()
    }
}
