//! Agent-based privacy identification: a Private-space agent reads the
//! whole task and lists what social common sense deems private.

use super::{Identified, RawEntity};
use crate::backend::{ChatBackend, ChatMessage, SpaceLabel};
use crate::entity::{EntityCategory, EntitySpan};
use crate::prompts::TemplateSet;
use crate::reply;
use crate::text;
use crate::{Error, Result};

/// Ask the agent for the private items in a task and locate each one in
/// the text. Items the agent invents (no occurrence in the task) are
/// dropped with a warning rather than failing the run.
pub async fn pia_identify(
    task_text: &str,
    agent: &dyn ChatBackend,
    templates: &TemplateSet,
) -> Result<Identified> {
    if agent.space() != SpaceLabel::Private {
        return Err(Error::PrivacyViolation(format!(
            "agent-view identification must run on a private backend, got \"{}\" on a public one",
            agent.name()
        )));
    }
    let messages = [
        ChatMessage::system(templates.get("pia")?),
        ChatMessage::user(task_text),
    ];
    let raw: Vec<RawEntity> = reply::complete_json_array(agent, &messages, "pia").await?;

    let chars: Vec<char> = task_text.chars().collect();
    let mut out = Identified::default();
    for item in raw {
        let needle: Vec<char> = item.surface.chars().collect();
        match text::find_casefold(&chars, &needle, 0) {
            Some((start, end)) => {
                // The span surface is the verbatim slice of the task, so
                // the substring invariant holds even when the agent
                // changed the casing.
                let surface: String = chars[start..end].iter().collect();
                out.set.insert(EntitySpan::new(
                    surface,
                    EntityCategory::parse(&item.category),
                    start,
                    end,
                ));
            }
            None => out.warnings.push(format!(
                "agent view: \"{}\" does not occur in the task; dropped",
                item.surface
            )),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{AuditLog, Script, ScriptedBackend};

    fn block_on<F: std::future::Future>(f: F) -> F::Output {
        tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(f)
    }

    fn private_agent(replies: Vec<&str>) -> ScriptedBackend {
        let script = Script::from_replies(replies.into_iter().map(String::from).collect());
        ScriptedBackend::new(script, "pia", SpaceLabel::Private, AuditLog::in_memory())
    }

    #[test]
    fn locates_reported_entities() {
        let task = "Contact JOHN SMITH at 555-0101 about the Lakeside deal.";
        let agent = private_agent(vec![
            "```json\n[{\"surface\": \"john smith\", \"category\": \"name\"},\n {\"surface\": \"555-0101\", \"category\": \"phone\"},\n {\"surface\": \"Marseille\", \"category\": \"location\"}]\n```",
        ]);
        let out = block_on(pia_identify(task, &agent, &TemplateSet::builtin())).unwrap();
        assert_eq!(out.set.len(), 2);
        let spans: Vec<&EntitySpan> = out.set.iter().collect();
        // Surfaces come from the task text, not the agent's casing.
        assert_eq!(spans[0].surface, "JOHN SMITH");
        assert!(spans[0].locates_in(task));
        assert_eq!(spans[1].surface, "555-0101");
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("Marseille"));
    }

    #[test]
    fn empty_report_is_fine() {
        let agent = private_agent(vec!["```json\n[]\n```"]);
        let out = block_on(pia_identify("nothing here", &agent, &TemplateSet::builtin())).unwrap();
        assert!(out.set.is_empty());
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn refuses_public_backend() {
        let script = Script::from_replies(vec!["[]".into()]);
        let agent = ScriptedBackend::new(script, "pia", SpaceLabel::Public, AuditLog::in_memory());
        match block_on(pia_identify("x", &agent, &TemplateSet::builtin())) {
            Err(Error::PrivacyViolation(_)) => {}
            other => panic!("expected privacy violation, got {other:?}"),
        }
    }

    #[test]
    fn reprompt_failure_is_terminal() {
        let agent = private_agent(vec!["not json", "still not"]);
        match block_on(pia_identify("x", &agent, &TemplateSet::builtin())) {
            Err(Error::AgentReply { role, .. }) => assert_eq!(role, "pia"),
            other => panic!("expected agent-reply error, got {other:?}"),
        }
    }
}
