//! Pipeline configuration: backends per agent role, stage toggles,
//! routing parameters and asset paths.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::{BackendConfig, SpaceLabel};
use crate::{Error, Result};

fn default_alpha() -> crate::Real {
    0.5
}
fn default_k() -> usize {
    3
}
fn default_n() -> usize {
    3
}
fn default_max_rounds() -> usize {
    5
}
fn default_true() -> bool {
    true
}
fn default_parallelism() -> usize {
    1
}

/// How the local recognizer view is produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RecognizerConfig {
    /// Regex patterns plus gazetteer files, keyed by category label.
    Builtin {
        #[serde(default)]
        gazetteers: BTreeMap<String, PathBuf>,
    },
    /// External NER service.
    Http { url: String },
}

/// One agent role's backend: a real endpoint or a scripted reply file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RoleBackend {
    Http {
        #[serde(flatten)]
        config: BackendConfig,
    },
    Scripted {
        space: SpaceLabel,
        script: PathBuf,
    },
}

impl RoleBackend {
    pub fn space(&self) -> SpaceLabel {
        match self {
            RoleBackend::Http { config } => config.space,
            RoleBackend::Scripted { space, .. } => *space,
        }
    }

    fn validate(&self, role: &str) -> Result<()> {
        if let RoleBackend::Http { config } = self {
            config
                .validate()
                .map_err(|e| Error::Config(format!("role \"{role}\": {e}")))?;
        }
        Ok(())
    }
}

/// Backends for every agent role in the pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoleConfigs {
    /// Agent-view privacy identification. Must be private-space.
    pub pia: RoleBackend,
    /// View-fusion arbiter. Must be private-space.
    pub fusion: RoleBackend,
    /// Domain-analysis agent naming relevant domains.
    pub daa: RoleBackend,
    /// Membership rating agent.
    pub membership: RoleBackend,
    /// Domain expert answering each fired rule.
    pub expert: RoleBackend,
    /// Answer-fusion agent merging rule answers.
    pub fusing: RoleBackend,
    /// Refinement expert. Must be public-space.
    pub disproof_expert: RoleBackend,
    /// Refinement critic. Must be public-space.
    pub disproof_assistant: RoleBackend,
}

/// File-system assets the pipeline needs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AssetPaths {
    /// Word-embedding table; required while the routing stage is on.
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    /// JSON map of domain name → keyword document.
    #[serde(default)]
    pub domain_corpus: Option<PathBuf>,
    /// Stopword list for keyword matching.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    /// Directory of prompt-template overrides.
    #[serde(default)]
    pub templates: Option<PathBuf>,
    /// Newline-delimited JSON audit sink.
    #[serde(default)]
    pub audit_log: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Blend weight between the embedding view and the keyword view.
    #[serde(default = "default_alpha")]
    pub alpha: crate::Real,
    /// Number of target domains (rules) to fire.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Number of domain phrases requested from the analysis agent.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Refinement round cap.
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    /// Toggle the identification/anonymization stage.
    #[serde(default = "default_true")]
    pub enable_ampp: bool,
    /// Toggle the domain-routing stage.
    #[serde(default = "default_true")]
    pub enable_drke: bool,
    /// Toggle the refinement loop.
    #[serde(default = "default_true")]
    pub enable_dle: bool,
    /// Skip the fusing call when a single rule fired.
    #[serde(default = "default_true")]
    pub skip_fusion_when_single: bool,
    /// Maximum concurrently running instances in a benchmark.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Randomly anonymize contextual entities that fusion rejected.
    /// Off by default: it trades answer quality for extra cover.
    #[serde(default)]
    pub anonymize_famous: bool,
    /// Seed for the `anonymize_famous` draw.
    #[serde(default)]
    pub famous_seed: u64,
    /// Extra "no contradiction" sentinel phrases.
    #[serde(default)]
    pub sentinels: Option<Vec<String>>,
    /// Override of the reference domain list.
    #[serde(default)]
    pub reference_domains: Option<Vec<String>>,
    pub recognizer: RecognizerConfig,
    pub roles: RoleConfigs,
    #[serde(default)]
    pub paths: AssetPaths,
}

impl PipelineConfig {
    /// Load from a JSON or TOML file, then validate.
    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        let mut config: PipelineConfig = if is_toml {
            toml::from_str(&body)
                .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?
        } else {
            serde_json::from_str(&body)
                .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?
        };
        // Paths inside the file resolve relative to the file itself.
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        if let RecognizerConfig::Builtin { gazetteers } = &mut self.recognizer {
            for path in gazetteers.values_mut() {
                fix(path);
            }
        }
        for role in self.roles_mut() {
            if let RoleBackend::Scripted { script, .. } = role {
                fix(script);
            }
        }
        for p in [
            &mut self.paths.embeddings,
            &mut self.paths.domain_corpus,
            &mut self.paths.stopwords,
            &mut self.paths.templates,
            &mut self.paths.audit_log,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    fn roles_mut(&mut self) -> [&mut RoleBackend; 8] {
        [
            &mut self.roles.pia,
            &mut self.roles.fusion,
            &mut self.roles.daa,
            &mut self.roles.membership,
            &mut self.roles.expert,
            &mut self.roles.fusing,
            &mut self.roles.disproof_expert,
            &mut self.roles.disproof_assistant,
        ]
    }

    pub fn roles_with_names(&self) -> [(&'static str, &RoleBackend); 8] {
        [
            ("pia", &self.roles.pia),
            ("view_fusion", &self.roles.fusion),
            ("domain_analysis", &self.roles.daa),
            ("membership", &self.roles.membership),
            ("expert", &self.roles.expert),
            ("answer_fusion", &self.roles.fusing),
            ("disproof_expert", &self.roles.disproof_expert),
            ("disproof_assistant", &self.roles.disproof_assistant),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha {} out of range [0, 1]", self.alpha)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be positive".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be positive".into()));
        }
        for (name, role) in self.roles_with_names() {
            role.validate(name)?;
        }
        // Trust-boundary constraints on roles that see raw or critical
        // content.
        if self.roles.pia.space() != SpaceLabel::Private {
            return Err(Error::Config(
                "role \"pia\" sees raw task text and must be private-space".into(),
            ));
        }
        if self.roles.fusion.space() != SpaceLabel::Private {
            return Err(Error::Config(
                "role \"view_fusion\" sees raw entity surfaces and must be private-space".into(),
            ));
        }
        if self.roles.disproof_expert.space() != SpaceLabel::Public
            || self.roles.disproof_assistant.space() != SpaceLabel::Public
        {
            return Err(Error::Config(
                "refinement roles run on anonymized text and must be public-space".into(),
            ));
        }
        if self.enable_drke {
            if self.paths.embeddings.is_none() {
                return Err(Error::Config(
                    "paths.embeddings is required while the routing stage is enabled".into(),
                ));
            }
            if self.paths.domain_corpus.is_none() {
                return Err(Error::Config(
                    "paths.domain_corpus is required while the routing stage is enabled".into(),
                ));
            }
        }
        if let Some(domains) = &self.reference_domains {
            crate::domain::ReferenceDomainSet::new(domains.clone())?;
        }
        Ok(())
    }
}
