//! Privacy-preserving middleware for LLM-backed task processing.
//!
//! Tasks are scanned for privacy-named entities by two independent
//! views, anonymized behind placeholder tags before anything crosses
//! the trust boundary to public endpoints, enriched by domain-routed
//! expert rules and a disproof-style refinement loop, and restored to
//! their original wording on the way back. An audit log captures every
//! outbound request so the boundary can be checked after the fact.

pub mod backend;
pub mod disproof;
pub mod domain;
pub mod entity;
pub mod eval;
pub mod identify;
pub mod numeric;
pub mod pipeline;
pub mod privacy_box;
pub mod prompts;
pub mod reply;
pub mod service;
pub mod text;

mod error;

pub use error::{Error, Result};

/// Scalar type used by the shipped pipeline. The kernels in [`numeric`]
/// and the metric/routing math stay generic over [`numeric::Scalar`];
/// everything above them is pinned to this alias.
pub type Real = f64;
