//! Domain rules: for each selected target domain, rate the task's
//! membership, run a domain-expert prompt (IF membership THEN expert),
//! and fuse the per-rule answers into one draft.

use serde::{Deserialize, Serialize};

use super::MembershipTerm;
use crate::backend::{ChatBackend, ChatMessage};
use crate::prompts::TemplateSet;
use crate::{Error, Result};

/// The output of one fired rule, rank order preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOutput {
    pub domain: String,
    pub membership: MembershipTerm,
    pub answer: String,
}

#[derive(Debug, Clone)]
pub struct MembershipOutcome {
    pub term: MembershipTerm,
    /// True when both replies were unusable and Medium was assumed.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct FusedAnswer {
    pub answer: String,
    /// True when the fusing reply was unusable and the answer of the
    /// highest-membership rule was taken instead.
    pub fell_back: bool,
}

/// Render the expert prompt for a domain.
pub fn build_expert_prompt(domain: &str, templates: &TemplateSet) -> Result<String> {
    if domain.trim().is_empty() {
        return Err(Error::Config("expert prompt domain must not be empty".into()));
    }
    templates.render("domain_expert", &[("domain", domain)])
}

/// Rate how strongly the task belongs to a domain. One reprompt; if the
/// second reply is also unusable, assumes Medium and flags it.
pub async fn membership_term(
    task_text: &str,
    domain: &str,
    agent: &dyn ChatBackend,
    templates: &TemplateSet,
) -> Result<MembershipOutcome> {
    let system = templates.render("membership", &[("domain", domain)])?;
    let messages = vec![ChatMessage::system(system), ChatMessage::user(task_text)];
    let first = agent.complete(&messages).await?;
    if let Some(term) = MembershipTerm::parse(&first) {
        return Ok(MembershipOutcome { term, flagged: false });
    }
    let mut retry = messages;
    retry.push(ChatMessage::assistant(&first));
    retry.push(ChatMessage::user(format!(
        "Your previous reply did not contain a rating. Reply with exactly one of: {}.",
        MembershipTerm::ALL.map(|t| t.label()).join(", ")
    )));
    let second = agent.complete(&retry).await?;
    match MembershipTerm::parse(&second) {
        Some(term) => Ok(MembershipOutcome { term, flagged: false }),
        None => Ok(MembershipOutcome { term: MembershipTerm::Medium, flagged: true }),
    }
}

/// Fire one rule per target domain, in rank order: K membership calls
/// and K expert calls total.
pub async fn evaluate_rules(
    task_text: &str,
    targets: &[(String, crate::Real)],
    membership_agent: &dyn ChatBackend,
    expert_agent: &dyn ChatBackend,
    templates: &TemplateSet,
) -> Result<(Vec<RuleOutput>, Vec<String>)> {
    let mut outputs = Vec::with_capacity(targets.len());
    let mut warnings = Vec::new();
    for (domain, _score) in targets {
        let membership = membership_term(task_text, domain, membership_agent, templates).await?;
        if membership.flagged {
            warnings.push(format!(
                "membership rating for \"{domain}\" was unusable twice; assuming Medium"
            ));
        }
        let prompt = build_expert_prompt(domain, templates)?;
        let answer = expert_agent
            .complete(&[ChatMessage::system(prompt), ChatMessage::user(task_text)])
            .await?;
        outputs.push(RuleOutput { domain: domain.clone(), membership: membership.term, answer });
    }
    Ok((outputs, warnings))
}

/// Merge the rule answers into one draft.
///
/// With a single rule and `skip_when_single` set, the rule's answer
/// passes through without an agent call. An empty or whitespace fusing
/// reply falls back to the answer of the highest-membership rule (ties
/// broken by rank), flagged.
pub async fn fuse_answers(
    task_text: &str,
    outputs: &[RuleOutput],
    agent: &dyn ChatBackend,
    templates: &TemplateSet,
    skip_when_single: bool,
) -> Result<FusedAnswer> {
    if outputs.is_empty() {
        return Err(Error::Config("no rule outputs to fuse".into()));
    }
    if outputs.len() == 1 && skip_when_single {
        return Ok(FusedAnswer { answer: outputs[0].answer.clone(), fell_back: false });
    }
    let mut user = format!("Task:\n{task_text}\n");
    for out in outputs {
        user.push_str(&format!(
            "\nDomain: {}\nRelevance: {}\nAnswer:\n{}\n",
            out.domain, out.membership, out.answer
        ));
    }
    let messages = [
        ChatMessage::system(templates.get("answer_fusion")?),
        ChatMessage::user(user),
    ];
    let reply = agent.complete(&messages).await?;
    if !reply.trim().is_empty() {
        return Ok(FusedAnswer { answer: reply, fell_back: false });
    }
    let mut best = 0usize;
    for (i, out) in outputs.iter().enumerate() {
        if out.membership > outputs[best].membership {
            best = i;
        }
    }
    Ok(FusedAnswer { answer: outputs[best].answer.clone(), fell_back: true })
}
