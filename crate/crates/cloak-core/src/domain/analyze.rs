//! Domain analysis: ask an agent to name the n knowledge domains most
//! relevant to an anonymized task.

use crate::backend::{ChatBackend, ChatMessage};
use crate::prompts::TemplateSet;
use crate::reply;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct DomainAnalysis {
    /// Exactly n nonempty phrases, most relevant first.
    pub phrases: Vec<String>,
    /// True when the agent reply was unusable and a generic fallback
    /// was substituted.
    pub fell_back: bool,
}

/// Request exactly `n` domain phrases. Shorter replies are padded by
/// repeating the last phrase, longer ones truncated. An unusable reply
/// (after one reprompt) degrades to n copies of "General", flagged.
pub async fn analyze_domains(
    task_text: &str,
    agent: &dyn ChatBackend,
    n: usize,
    templates: &TemplateSet,
) -> Result<DomainAnalysis> {
    if n == 0 {
        return Err(Error::Config("domain phrase count must be positive".into()));
    }
    let n_str = n.to_string();
    let system = templates.render("domain_analysis", &[("n", n_str.as_str())])?;
    let messages = [ChatMessage::system(system), ChatMessage::user(task_text)];
    let parsed = reply::complete_json_array::<String>(agent, &messages, "domain_analysis").await;
    let mut phrases: Vec<String> = match parsed {
        Ok(list) => list
            .into_iter()
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .collect(),
        Err(Error::AgentReply { .. }) => Vec::new(),
        Err(other) => return Err(other),
    };
    if phrases.is_empty() {
        // Nothing usable, including the valid-but-empty "[]" reply: there
        // is no last phrase to pad with, so degrade to a generic domain.
        return Ok(DomainAnalysis { phrases: vec!["General".to_string(); n], fell_back: true });
    }
    let last = phrases.last().unwrap().clone();
    while phrases.len() < n {
        phrases.push(last.clone());
    }
    phrases.truncate(n);
    Ok(DomainAnalysis { phrases, fell_back: false })
}
