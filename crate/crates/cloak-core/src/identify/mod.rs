//! Multi-view privacy identification.
//!
//! Two independent views find privacy-named entities in a task: a local
//! pattern/gazetteer recognizer ([`pner`]) and a Private-space agent
//! judging by social common sense ([`pia`]). The views are then fused
//! ([`fusion`]): agreement is kept unconditionally, disagreement is
//! arbitrated item by item by a fusion agent.

pub mod fusion;
pub mod pner;
pub mod pia;

pub use fusion::{fuse_views, FusionOutcome};
pub use pner::{ExternalNer, PnerRecognizer, Recognizer};
pub use pia::pia_identify;

use serde::{Deserialize, Serialize};

use crate::entity::{EntityCategory, EntityKey, EntitySet};

/// Wire shape for entity mentions exchanged with agents: surface plus
/// category label, no offsets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawEntity {
    pub surface: String,
    pub category: String,
}

impl RawEntity {
    pub fn key(&self) -> EntityKey {
        EntityKey::new(&self.surface, EntityCategory::parse(&self.category))
    }
}

/// An identification result plus any non-fatal notes produced on the way.
#[derive(Debug, Clone, Default)]
pub struct Identified {
    pub set: EntitySet,
    pub warnings: Vec<String>,
}
