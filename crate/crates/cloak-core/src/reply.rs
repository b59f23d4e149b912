//! Extraction of structured JSON payloads from free-form agent replies.
//!
//! Agents are instructed to answer with a fenced JSON array, but replies
//! drift: prose around the fence, a bare array, stray language tags. The
//! helpers here try the likely shapes in order and support the standard
//! one-reprompt recovery used by every JSON-speaking agent call.

use serde::de::DeserializeOwned;

use crate::backend::{ChatBackend, ChatMessage};
use crate::{Error, Result};

/// Reprompt sent after an unparseable reply. One retry only.
pub const REPROMPT: &str = "Your previous reply could not be parsed. Respond with only a JSON \
array inside a fenced code block, exactly as instructed, with no other text.";

/// Candidate JSON slices of a reply, most specific first: the contents of
/// the first fenced code block, the outermost bracketed slice, then the
/// whole trimmed reply.
fn candidates(reply: &str) -> Vec<&str> {
    let mut out = Vec::new();
    if let Some(open) = reply.find("```") {
        let after = &reply[open + 3..];
        // Skip an optional language tag on the fence line.
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
        let body = &after[body_start..];
        if let Some(close) = body.find("```") {
            out.push(body[..close].trim());
        }
    }
    if let (Some(open), Some(close)) = (reply.find('['), reply.rfind(']')) {
        if close > open {
            out.push(reply[open..=close].trim());
        }
    }
    out.push(reply.trim());
    out
}

/// Parse the first JSON array found in a reply.
pub fn parse_json_array<T: DeserializeOwned>(reply: &str) -> Option<Vec<T>> {
    for cand in candidates(reply) {
        if cand.is_empty() {
            continue;
        }
        if let Ok(parsed) = serde_json::from_str::<Vec<T>>(cand) {
            return Some(parsed);
        }
    }
    None
}

/// Ask a backend for a JSON array, reprompting once on an unparseable
/// reply. A second unparseable reply is an [`Error::AgentReply`] carrying
/// the role name; backend failures pass through unchanged.
pub async fn complete_json_array<T: DeserializeOwned>(
    backend: &dyn ChatBackend,
    messages: &[ChatMessage],
    role: &str,
) -> Result<Vec<T>> {
    let first = backend.complete(messages).await?;
    if let Some(parsed) = parse_json_array(&first) {
        return Ok(parsed);
    }
    let mut retry = messages.to_vec();
    retry.push(ChatMessage::assistant(&first));
    retry.push(ChatMessage::user(REPROMPT));
    let second = backend.complete(&retry).await?;
    parse_json_array(&second).ok_or_else(|| Error::AgentReply {
        role: role.to_string(),
        excerpt: Error::excerpt(&second),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{AuditLog, Script, ScriptedBackend, SpaceLabel};

    fn block_on<F: std::future::Future>(f: F) -> F::Output {
        tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(f)
    }

    #[test]
    fn parses_fenced_bare_and_noisy_arrays() {
        let fenced = "Here you go:\n```json\n[\"a\", \"b\"]\n```\nDone.";
        assert_eq!(parse_json_array::<String>(fenced).unwrap(), vec!["a", "b"]);

        let bare = "[1, 2, 3]";
        assert_eq!(parse_json_array::<i64>(bare).unwrap(), vec![1, 2, 3]);

        let noisy = "Sure! The answer is [\"x\"] as requested.";
        assert_eq!(parse_json_array::<String>(noisy).unwrap(), vec!["x"]);

        let untagged_fence = "```\n[\"y\"]\n```";
        assert_eq!(parse_json_array::<String>(untagged_fence).unwrap(), vec!["y"]);

        assert!(parse_json_array::<String>("no json here").is_none());
        assert!(parse_json_array::<String>("{\"not\": \"array\"}").is_none());
    }

    #[test]
    fn empty_array_parses() {
        assert_eq!(parse_json_array::<String>("```json\n[]\n```").unwrap(), Vec::<String>::new());
    }

    #[test]
    fn reprompts_once_then_errors() {
        let audit = AuditLog::in_memory();

        // Recovers on the second reply.
        let script = Script::from_replies(vec!["garbage".into(), "[\"ok\"]".into()]);
        let backend = ScriptedBackend::new(script, "fusion", SpaceLabel::Private, audit.clone());
        let out = block_on(complete_json_array::<String>(
            &backend,
            &[ChatMessage::user("go")],
            "fusion",
        ))
        .unwrap();
        assert_eq!(out, vec!["ok"]);
        // Two calls happened; the retry transcript carries the reprompt.
        let entries = audit.snapshot();
        assert_eq!(entries.len(), 2);
        assert!(entries[1].outbound_text().contains(REPROMPT));
        assert!(entries[1].outbound_text().contains("garbage"));

        // Fails after two bad replies, naming the role.
        let script = Script::from_replies(vec!["bad".into(), "still bad".into()]);
        let backend = ScriptedBackend::new(script, "fusion", SpaceLabel::Private, audit.clone());
        match block_on(complete_json_array::<String>(&backend, &[], "fusion")) {
            Err(Error::AgentReply { role, excerpt }) => {
                assert_eq!(role, "fusion");
                assert_eq!(excerpt, "still bad");
            }
            other => panic!("expected agent-reply error, got {other:?}"),
        }
    }

    #[test]
    fn backend_errors_pass_through() {
        let script = Script::from_replies(vec![]);
        let backend = ScriptedBackend::new(script, "daa", SpaceLabel::Public, AuditLog::in_memory());
        match block_on(complete_json_array::<String>(&backend, &[], "daa")) {
            Err(Error::ScriptUnderrun { role }) => assert_eq!(role, "daa"),
            other => panic!("expected underrun, got {other:?}"),
        }
    }
}
