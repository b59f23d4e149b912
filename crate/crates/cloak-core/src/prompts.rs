//! Prompt templates for every agent role.
//!
//! Built-in defaults are compiled in from `assets/templates/`; a config
//! may point at a directory whose `<name>.txt` files override them
//! one by one. Slots use `{name}` syntax and substituted values are
//! never re-scanned, so braces inside values stay literal.

use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result};

/// Role-keyed template names known to the pipeline.
pub const TEMPLATE_NAMES: &[&str] = &[
    "pia",
    "view_fusion",
    "domain_analysis",
    "domain_expert",
    "membership",
    "answer_fusion",
    "generic_expert",
    "disproof_expert",
    "disproof_assistant",
    "nominate",
];

macro_rules! builtin {
    ($name:literal) => {
        (
            $name,
            include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/../../assets/templates/",
                $name,
                ".txt"
            )),
        )
    };
}

const BUILTINS: &[(&str, &str)] = &[
    builtin!("pia"),
    builtin!("view_fusion"),
    builtin!("domain_analysis"),
    builtin!("domain_expert"),
    builtin!("membership"),
    builtin!("answer_fusion"),
    builtin!("generic_expert"),
    builtin!("disproof_expert"),
    builtin!("disproof_assistant"),
    builtin!("nominate"),
];

#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: HashMap<String, String>,
}

impl TemplateSet {
    /// The compiled-in defaults.
    pub fn builtin() -> Self {
        let templates = BUILTINS
            .iter()
            .map(|(k, v)| (k.to_string(), v.trim_end().to_string()))
            .collect();
        Self { templates }
    }

    /// Builtin defaults plus per-file overrides from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut set = Self::builtin();
        if !dir.is_dir() {
            return Err(Error::Config(format!(
                "template directory {} does not exist",
                dir.display()
            )));
        }
        for name in TEMPLATE_NAMES {
            let path = dir.join(format!("{name}.txt"));
            if path.is_file() {
                let body = std::fs::read_to_string(&path).map_err(|e| {
                    Error::Config(format!("template {}: {e}", path.display()))
                })?;
                set.templates.insert(name.to_string(), body.trim_end().to_string());
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Result<&str> {
        self.templates
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing template \"{name}\"")))
    }

    /// Substitute `{slot}` markers. Unknown markers are left verbatim;
    /// values are inserted as-is and never re-scanned.
    pub fn render(&self, name: &str, slots: &[(&str, &str)]) -> Result<String> {
        Ok(render_str(self.get(name)?, slots))
    }
}

/// Single-pass `{slot}` substitution over a template string.
pub fn render_str(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let key = &after[..close];
                match slots.iter().find(|(k, _)| *k == key) {
                    Some((_, value)) => {
                        out.push_str(value);
                        rest = &after[close + 1..];
                    }
                    None => {
                        out.push('{');
                        rest = after;
                    }
                }
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
