//! Disproof-driven answer refinement.
//!
//! An expert proposes an answer; an assistant tries to find a concrete
//! contradiction. Each contradiction is appended to the question and the
//! expert answers again, until the assistant finds nothing or a hard
//! round cap is reached. Both agents run on the public side, so they
//! only ever see anonymized text.

use serde::{Deserialize, Serialize};

use crate::backend::{ChatBackend, ChatMessage};
use crate::prompts::TemplateSet;
use crate::{Error, Result};

/// One expert/assistant exchange. `contradiction` is empty on the final
/// round when the assistant found nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisproofRound {
    pub answer: String,
    pub contradiction: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// The assistant reported no contradiction.
    NoContradiction,
    /// The round cap cut the loop short.
    RoundCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisproofTranscript {
    pub question_initial: String,
    pub rounds: Vec<DisproofRound>,
    pub terminated_by: Termination,
}

/// Replies (besides whitespace) that count as "no contradiction found".
pub const DEFAULT_SENTINELS: &[&str] = &["none", "no contradiction", "no contradictions found"];

#[derive(Debug, Clone)]
pub struct DisproofOptions {
    pub max_rounds: usize,
    pub sentinels: Vec<String>,
    /// Optional draft answer the expert starts from.
    pub draft: Option<String>,
}

impl Default for DisproofOptions {
    fn default() -> Self {
        Self {
            max_rounds: 5,
            sentinels: DEFAULT_SENTINELS.iter().map(|s| s.to_string()).collect(),
            draft: None,
        }
    }
}

/// Whether an assistant reply means "nothing to object to": empty after
/// trimming, or equal (case-insensitively, ignoring trailing periods) to
/// one of the sentinel phrases.
pub fn is_empty_contradiction(reply: &str, sentinels: &[String]) -> bool {
    let trimmed = reply.trim().trim_end_matches('.').trim();
    if trimmed.is_empty() {
        return true;
    }
    let lowered = trimmed.to_lowercase();
    sentinels.iter().any(|s| lowered == s.trim().to_lowercase())
}

/// Run the refinement loop. Returns the last answer plus the full
/// transcript. The contradiction separator appended to the question is
/// a newline followed by `"Contradiction: "`.
pub async fn disproof_infer(
    question: &str,
    expert: &dyn ChatBackend,
    assistant: &dyn ChatBackend,
    templates: &TemplateSet,
    options: &DisproofOptions,
) -> Result<(String, DisproofTranscript)> {
    if options.max_rounds == 0 {
        return Err(Error::Config("disproof round cap must be positive".into()));
    }
    let draft = options.draft.as_deref().unwrap_or("(none)");
    let expert_system = templates.render("disproof_expert", &[("draft", draft)])?;
    let assistant_system = templates.get("disproof_assistant")?.to_string();

    let mut accumulated = question.to_string();
    let mut rounds: Vec<DisproofRound> = Vec::new();
    loop {
        let answer = expert
            .complete(&[
                ChatMessage::system(&expert_system),
                ChatMessage::user(&accumulated),
            ])
            .await?;
        let probe = format!("Question:\n{accumulated}\n\nProposed answer:\n{answer}");
        let contradiction = assistant
            .complete(&[
                ChatMessage::system(&assistant_system),
                ChatMessage::user(probe),
            ])
            .await?;
        if is_empty_contradiction(&contradiction, &options.sentinels) {
            rounds.push(DisproofRound { answer: answer.clone(), contradiction: String::new() });
            return Ok((
                answer,
                DisproofTranscript {
                    question_initial: question.to_string(),
                    rounds,
                    terminated_by: Termination::NoContradiction,
                },
            ));
        }
        rounds.push(DisproofRound {
            answer: answer.clone(),
            contradiction: contradiction.clone(),
        });
        if rounds.len() >= options.max_rounds {
            return Ok((
                answer,
                DisproofTranscript {
                    question_initial: question.to_string(),
                    rounds,
                    terminated_by: Termination::RoundCap,
                },
            ));
        }
        accumulated.push_str("\nContradiction: ");
        accumulated.push_str(&contradiction);
    }
}
