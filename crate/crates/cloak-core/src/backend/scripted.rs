//! Scripted backend: canned replies dequeued in order, optionally keyed
//! by agent role. Deterministic by construction, used for offline runs,
//! fixtures and tests.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::{Arc, Mutex};

use async_trait::async_trait;

use super::{AuditLog, ChatBackend, ChatMessage, SpaceLabel};
use crate::{Error, Result};

/// A reply script. Either a single anonymous queue shared by every role,
/// or one queue per role name.
#[derive(Debug)]
pub struct Script {
    queues: Mutex<HashMap<String, VecDeque<String>>>,
    keyed: bool,
}

impl Script {
    /// Load from JSON: either an array of strings (one shared queue) or
    /// an object mapping role names to arrays of strings.
    pub fn load(path: &Path) -> Result<Arc<Self>> {
        let body = std::fs::read_to_string(path)?;
        Self::parse(&body)
    }

    pub fn parse(body: &str) -> Result<Arc<Self>> {
        let as_array = serde_json::from_str::<Vec<String>>(body);
        let as_map = serde_json::from_str::<HashMap<String, Vec<String>>>(body);
        match (as_array, as_map) {
            (Ok(replies), _) => Ok(Self::from_replies(replies)),
            (_, Ok(map)) => Ok(Self::from_role_map(map)),
            (Err(ea), Err(em)) => {
                // Report the error from the shape the file started as.
                let err = if body.trim_start().starts_with('[') { ea } else { em };
                Err(Error::ScriptParse { line: err.line(), message: err.to_string() })
            }
        }
    }

    pub fn from_replies(replies: Vec<String>) -> Arc<Self> {
        let mut queues = HashMap::new();
        queues.insert(String::new(), replies.into());
        Arc::new(Self { queues: Mutex::new(queues), keyed: false })
    }

    pub fn from_role_map(map: HashMap<String, Vec<String>>) -> Arc<Self> {
        let queues = map.into_iter().map(|(k, v)| (k, v.into())).collect();
        Arc::new(Self { queues: Mutex::new(queues), keyed: true })
    }

    /// Dequeue the next reply for a role, or `None` when exhausted (or,
    /// for keyed scripts, when the role has no queue at all).
    fn pop(&self, role: &str) -> Option<String> {
        let key = if self.keyed { role } else { "" };
        self.queues.lock().unwrap().get_mut(key)?.pop_front()
    }

    /// Replies left for a role.
    pub fn remaining(&self, role: &str) -> usize {
        let key = if self.keyed { role } else { "" };
        self.queues.lock().unwrap().get(key).map_or(0, |q| q.len())
    }
}

/// Backend that answers from a [`Script`].
pub struct ScriptedBackend {
    script: Arc<Script>,
    role: String,
    space: SpaceLabel,
    audit: Arc<AuditLog>,
}

impl ScriptedBackend {
    pub fn new(script: Arc<Script>, role: impl Into<String>, space: SpaceLabel, audit: Arc<AuditLog>) -> Self {
        Self { script, role: role.into(), space, audit }
    }
}

#[async_trait]
impl ChatBackend for ScriptedBackend {
    fn space(&self) -> SpaceLabel {
        self.space
    }

    fn name(&self) -> &str {
        &self.role
    }

    async fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        let reply = self
            .script
            .pop(&self.role)
            .ok_or_else(|| Error::ScriptUnderrun { role: self.role.clone() })?;
        self.audit.record(self.space, &self.role, messages, &reply);
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_on<F: std::future::Future>(f: F) -> F::Output {
        tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(f)
    }

    #[test]
    fn plain_array_serves_any_role_in_order() {
        let script = Script::parse(r#"["first", "second"]"#).unwrap();
        let audit = AuditLog::in_memory();
        let a = ScriptedBackend::new(script.clone(), "a", SpaceLabel::Public, audit.clone());
        let b = ScriptedBackend::new(script.clone(), "b", SpaceLabel::Public, audit.clone());
        block_on(async {
            assert_eq!(a.complete(&[ChatMessage::user("x")]).await.unwrap(), "first");
            assert_eq!(b.complete(&[ChatMessage::user("y")]).await.unwrap(), "second");
            match a.complete(&[]).await {
                Err(Error::ScriptUnderrun { role }) => assert_eq!(role, "a"),
                other => panic!("expected underrun, got {other:?}"),
            }
        });
        assert_eq!(audit.len(), 2);
    }

    #[test]
    fn keyed_script_routes_by_role() {
        let script = Script::parse(r#"{"pia": ["p1", "p2"], "expert": ["e1"]}"#).unwrap();
        let audit = AuditLog::in_memory();
        let pia = ScriptedBackend::new(script.clone(), "pia", SpaceLabel::Private, audit.clone());
        let expert = ScriptedBackend::new(script.clone(), "expert", SpaceLabel::Public, audit.clone());
        let stranger = ScriptedBackend::new(script.clone(), "stranger", SpaceLabel::Public, audit.clone());
        block_on(async {
            assert_eq!(expert.complete(&[]).await.unwrap(), "e1");
            assert_eq!(pia.complete(&[]).await.unwrap(), "p1");
            assert_eq!(script.remaining("pia"), 1);
            // A role with no queue underruns immediately.
            match stranger.complete(&[]).await {
                Err(Error::ScriptUnderrun { role }) => assert_eq!(role, "stranger"),
                other => panic!("expected underrun, got {other:?}"),
            }
        });
    }

    #[test]
    fn parse_failure_reports_line() {
        let bad = "[\n\"ok\",\n3\n]";
        match Script::parse(bad) {
            Err(Error::ScriptParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(Script::parse("{\"role\": [\"ok\"]}").is_ok());
        assert!(Script::parse("{\"role\": \"not an array\"}").is_err());
    }

    #[test]
    fn load_reads_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("script.json");
        std::fs::write(&path, r#"["only"]"#).unwrap();
        let script = Script::load(&path).unwrap();
        assert_eq!(script.remaining("anything"), 1);
    }

    #[test]
    fn underrun_leaves_no_audit_entry() {
        let script = Script::from_replies(vec![]);
        let audit = AuditLog::in_memory();
        let b = ScriptedBackend::new(script, "solo", SpaceLabel::Public, audit.clone());
        block_on(async {
            assert!(b.complete(&[ChatMessage::user("x")]).await.is_err());
        });
        assert!(audit.is_empty());
    }
}
