//! View fusion: keep what both views agree on, let a Private-space agent
//! arbitrate the disagreement item by item.
//!
//! The fused set is always clamped between the intersection and the
//! union of the two views, whatever the agent answers.

use std::collections::BTreeSet;

use super::RawEntity;
use crate::backend::{ChatBackend, ChatMessage, SpaceLabel};
use crate::entity::{EntityKey, EntitySet};
use crate::prompts::TemplateSet;
use crate::reply;
use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct FusionOutcome {
    pub set: EntitySet,
    pub warnings: Vec<String>,
    /// Whether the agent was consulted (false when the views agreed).
    pub consulted_agent: bool,
    /// Whether the agent reply was unusable and the intersection alone
    /// was kept.
    pub fell_back: bool,
}

/// Fuse two identification views.
///
/// The agent sees only the symmetric difference, presented in canonical
/// key order, so the call is symmetric in its inputs: fusing (v1, v2)
/// and (v2, v1) produce the same entity set.
pub async fn fuse_views(
    v1: &EntitySet,
    v2: &EntitySet,
    agent: &dyn ChatBackend,
    templates: &TemplateSet,
) -> Result<FusionOutcome> {
    if agent.space() != SpaceLabel::Private {
        return Err(Error::PrivacyViolation(format!(
            "view fusion must run on a private backend, got \"{}\" on a public one",
            agent.name()
        )));
    }
    let mut outcome = FusionOutcome {
        set: v1.intersection(v2),
        ..FusionOutcome::default()
    };
    let disputed = v1.symmetric_difference(v2);
    if disputed.is_empty() {
        return Ok(outcome);
    }
    outcome.consulted_agent = true;

    // Original surfaces, in canonical key order. Each disputed entity
    // lives in exactly one view, so the listing does not depend on the
    // argument order.
    let listing: Vec<RawEntity> = disputed
        .iter()
        .map(|s| RawEntity {
            surface: s.surface.clone(),
            category: s.category.label().to_string(),
        })
        .collect();
    let messages = [
        ChatMessage::system(templates.get("view_fusion")?),
        ChatMessage::user(serde_json::to_string_pretty(&listing)?),
    ];
    match reply::complete_json_array::<RawEntity>(agent, &messages, "view_fusion").await {
        Ok(kept) => {
            let approved: BTreeSet<EntityKey> = kept
                .iter()
                .map(RawEntity::key)
                .inspect(|key| {
                    if !disputed.contains_key(key) {
                        outcome.warnings.push(format!(
                            "view fusion: agent added \"{key}\" which neither view flagged; discarded"
                        ));
                    }
                })
                .collect();
            for span in disputed.iter() {
                if approved.contains(&span.key()) {
                    outcome.set.insert(span.clone());
                }
            }
        }
        Err(Error::AgentReply { role, excerpt }) => {
            outcome.fell_back = true;
            outcome.warnings.push(format!(
                "view fusion: unparseable reply from \"{role}\" ({excerpt}); kept the agreed entities only"
            ));
        }
        Err(other) => return Err(other),
    }
    Ok(outcome)
}
