//! Chat-completion backends.
//!
//! A backend is anything that can answer a chat transcript: a remote or
//! local endpoint speaking the OpenAI-compatible protocol, or a scripted
//! queue of canned replies for offline runs. Every backend carries a
//! space label marking which side of the trust boundary it lives on and
//! records each successful exchange in a shared audit log.

mod audit;
mod http;
mod scripted;

pub use audit::{AuditEntry, AuditLog};
pub use http::{HttpBackend, RetryPolicy};
pub use scripted::{Script, ScriptedBackend};

use std::sync::Arc;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Trust-boundary label. Private backends may see raw task content;
/// public backends must only ever receive anonymized text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceLabel {
    Private,
    Public,
}

impl std::fmt::Display for SpaceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpaceLabel::Private => "private",
            SpaceLabel::Public => "public",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

/// Sampling parameters for one backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
}

impl GenerationParams {
    /// Public-space default: fully deterministic decoding.
    pub fn public_default() -> Self {
        Self { temperature: 0.0, top_p: 1.0, max_new_tokens: 1024 }
    }

    /// Private-space default: mild sampling, short completions.
    pub fn private_default() -> Self {
        Self { temperature: 0.6, top_p: 1.0, max_new_tokens: 256 }
    }

    pub fn for_space(space: SpaceLabel) -> Self {
        match space {
            SpaceLabel::Public => Self::public_default(),
            SpaceLabel::Private => Self::private_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) || !self.temperature.is_finite() {
            return Err(Error::Config(format!(
                "temperature {} out of range [0, 2]",
                self.temperature
            )));
        }
        if !(0.0..=1.0).contains(&self.top_p) || !self.top_p.is_finite() {
            return Err(Error::Config(format!("top_p {} out of range [0, 1]", self.top_p)));
        }
        if self.max_new_tokens == 0 {
            return Err(Error::Config("max_new_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// Connection settings for one HTTP backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub space: SpaceLabel,
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key, if the
    /// endpoint needs one. The key itself never appears in config files.
    #[serde(default)]
    pub api_key_env_var: Option<String>,
    /// Sampling parameters; the space default applies when omitted.
    #[serde(default)]
    pub params: Option<GenerationParams>,
}

impl BackendConfig {
    pub fn resolved_params(&self) -> GenerationParams {
        self.params.unwrap_or_else(|| GenerationParams::for_space(self.space))
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoint_url.trim().is_empty() {
            return Err(Error::Config("endpoint_url must not be empty".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(Error::Config("model_name must not be empty".into()));
        }
        self.resolved_params().validate()
    }
}

/// A chat completion source.
#[async_trait]
pub trait ChatBackend: Send + Sync {
    /// Which side of the trust boundary this backend lives on.
    fn space(&self) -> SpaceLabel;

    /// Stable name used in audit entries, normally the agent role.
    fn name(&self) -> &str;

    /// Answer a chat transcript. Implementations record one audit entry
    /// per successful completion, never for failures or retries.
    async fn complete(&self, messages: &[ChatMessage]) -> Result<String>;
}

pub type SharedBackend = Arc<dyn ChatBackend>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_defaults_per_space() {
        let public = GenerationParams::for_space(SpaceLabel::Public);
        assert_eq!(public.temperature, 0.0);
        assert_eq!(public.top_p, 1.0);
        let private = GenerationParams::for_space(SpaceLabel::Private);
        assert_eq!(private.temperature, 0.6);
        assert_eq!(private.top_p, 1.0);
        assert_eq!(private.max_new_tokens, 256);
    }

    #[test]
    fn params_validation() {
        assert!(GenerationParams::public_default().validate().is_ok());
        let bad = GenerationParams { temperature: 2.5, top_p: 1.0, max_new_tokens: 16 };
        assert!(bad.validate().is_err());
        let bad = GenerationParams { temperature: 0.0, top_p: 1.5, max_new_tokens: 16 };
        assert!(bad.validate().is_err());
        let bad = GenerationParams { temperature: 0.0, top_p: 1.0, max_new_tokens: 0 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn backend_config_resolves_space_defaults() {
        let cfg: BackendConfig = serde_json::from_str(
            r#"{"space": "private", "endpoint_url": "http://localhost:1", "model_name": "m"}"#,
        )
        .unwrap();
        assert_eq!(cfg.resolved_params(), GenerationParams::private_default());
        assert!(cfg.validate().is_ok());
    }
}
