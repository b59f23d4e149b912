//! The privacy box: a bijective vocabulary between entity surfaces and
//! placeholder tags, plus the two text transforms built on it.
//!
//! Anonymization replaces every word-bounded, case-insensitive surface
//! occurrence with its tag; deanonymization restores tags to surfaces.
//! The box never leaves the private side of the trust boundary.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::entity::{EntityCategory, EntityKey, EntitySet};
use crate::text;
use crate::{Error, Result};

/// A placeholder tag `<stem_index>`, e.g. `<name_1>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placeholder {
    pub stem: String,
    pub index: u32,
}

impl Placeholder {
    pub fn new(stem: impl Into<String>, index: u32) -> Self {
        Self { stem: stem.into(), index }
    }

    pub fn rendered(&self) -> String {
        format!("<{}_{}>", self.stem, self.index)
    }

    pub fn parse(s: &str) -> Option<Placeholder> {
        let caps = placeholder_re().captures(s)?;
        let whole = caps.get(0)?;
        if whole.start() != 0 || whole.end() != s.len() {
            return None;
        }
        Some(Placeholder {
            stem: caps[1].to_string(),
            index: caps[2].parse().ok()?,
        })
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}_{}>", self.stem, self.index)
    }
}

impl Serialize for Placeholder {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.rendered())
    }
}

impl<'de> Deserialize<'de> for Placeholder {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Placeholder::parse(&s)
            .ok_or_else(|| D::Error::custom(format!("\"{s}\" is not a placeholder tag")))
    }
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<([a-z][a-z0-9_]*)_(\d+)>").unwrap())
}

/// One vocabulary entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxEntry {
    pub surface: String,
    pub category: EntityCategory,
    pub placeholder: Placeholder,
}

/// Bijective entity ↔ placeholder vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PrivacyBox {
    entries: Vec<BoxEntry>,
}

impl PrivacyBox {
    /// Build a vocabulary from an entity set. Entities sharing the same
    /// normalized surface keep only the first-identified one; indices
    /// count per placeholder stem in order of first occurrence in the
    /// task (ties broken by lexicographic surface).
    pub fn build(entities: &EntitySet) -> PrivacyBox {
        let mut seen_surfaces: HashMap<String, ()> = HashMap::new();
        let mut spans: Vec<_> = Vec::new();
        for span in entities.iter() {
            let norm = text::normalize(&span.surface);
            if seen_surfaces.insert(norm, ()).is_none() {
                spans.push(span.clone());
            }
        }
        spans.sort_by(|a, b| {
            a.start
                .cmp(&b.start)
                .then_with(|| a.surface.cmp(&b.surface))
        });
        let mut counters: HashMap<String, u32> = HashMap::new();
        let entries = spans
            .into_iter()
            .map(|span| {
                let stem = span.category.stem();
                let counter = counters.entry(stem.clone()).or_insert(0);
                *counter += 1;
                BoxEntry {
                    surface: span.surface,
                    category: span.category,
                    placeholder: Placeholder::new(stem, *counter),
                }
            })
            .collect();
        PrivacyBox { entries }
    }

    pub fn entries(&self) -> &[BoxEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.surface.as_str())
    }

    /// Entity keys of the vocabulary, e.g. for comparison against a gold
    /// annotation.
    pub fn entity_set(&self) -> EntitySet {
        self.entries
            .iter()
            .map(|e| crate::entity::EntitySpan::new(e.surface.clone(), e.category.clone(), 0, 0))
            .collect()
    }

    fn entry_by_key(&self, key: &EntityKey) -> Option<&BoxEntry> {
        self.entries
            .iter()
            .find(|e| EntityKey::new(&e.surface, e.category.clone()) == *key)
    }

    pub fn placeholder_for(&self, surface: &str, category: EntityCategory) -> Option<&Placeholder> {
        self.entry_by_key(&EntityKey::new(surface, category))
            .map(|e| &e.placeholder)
    }

    /// Replace every word-bounded, case-insensitive occurrence of every
    /// surface with its placeholder tag. Longer surfaces win overlaps.
    pub fn anonymize(&self, task_text: &str) -> String {
        if self.entries.is_empty() {
            return task_text.to_string();
        }
        let chars: Vec<char> = task_text.chars().collect();
        let mut candidates: Vec<(usize, usize, usize)> = Vec::new(); // (start, end, entry)
        for (i, entry) in self.entries.iter().enumerate() {
            let needle: Vec<char> = entry.surface.chars().collect();
            for (start, end) in text::word_bounded_matches(&chars, &needle) {
                candidates.push((start, end, i));
            }
        }
        candidates.sort_by(|a, b| {
            (b.1 - b.0)
                .cmp(&(a.1 - a.0))
                .then(a.0.cmp(&b.0))
                .then(a.2.cmp(&b.2))
        });
        let mut chosen: Vec<(usize, usize, usize)> = Vec::new();
        for (start, end, i) in candidates {
            if chosen.iter().any(|&(s, e, _)| start < e && s < end) {
                continue;
            }
            chosen.push((start, end, i));
        }
        chosen.sort_by_key(|c| c.0);

        let mut out = String::with_capacity(task_text.len());
        let mut cursor = 0usize;
        for (start, end, i) in chosen {
            out.extend(&chars[cursor..start]);
            out.push_str(&self.entries[i].placeholder.rendered());
            cursor = end;
        }
        out.extend(&chars[cursor..]);
        out
    }

    /// Replace every known placeholder tag with its surface. Unknown
    /// tags stay verbatim, one warning per occurrence.
    pub fn deanonymize(&self, answer_text: &str) -> (String, Vec<String>) {
        let by_rendered: HashMap<String, &str> = self
            .entries
            .iter()
            .map(|e| (e.placeholder.rendered(), e.surface.as_str()))
            .collect();
        let mut out = String::with_capacity(answer_text.len());
        let mut warnings = Vec::new();
        let mut cursor = 0usize;
        for m in placeholder_re().find_iter(answer_text) {
            out.push_str(&answer_text[cursor..m.start()]);
            match by_rendered.get(m.as_str()) {
                Some(surface) => out.push_str(surface),
                None => {
                    out.push_str(m.as_str());
                    warnings.push(format!(
                        "placeholder {} is not in the vocabulary; left verbatim",
                        m.as_str()
                    ));
                }
            }
            cursor = m.end();
        }
        out.push_str(&answer_text[cursor..]);
        (out, warnings)
    }

    /// Validate the bijection: every entity key and every rendered tag
    /// appears exactly once.
    pub fn validate(&self) -> Result<()> {
        let mut keys = HashMap::new();
        let mut tags = HashMap::new();
        for entry in &self.entries {
            let key = EntityKey::new(&entry.surface, entry.category.clone());
            if keys.insert(key.clone(), ()).is_some() {
                return Err(Error::Config(format!(
                    "privacy box maps entity \"{key}\" twice"
                )));
            }
            let tag = entry.placeholder.rendered();
            if tags.insert(tag.clone(), ()).is_some() {
                return Err(Error::Config(format!(
                    "privacy box maps placeholder {tag} twice"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            entries: &'a [BoxEntry],
        }
        serde_json::to_string_pretty(&File { entries: &self.entries }).unwrap()
    }

    pub fn from_json(body: &str) -> Result<PrivacyBox> {
        let parsed: PrivacyBox = serde_json::from_str(body)?;
        Ok(parsed)
    }
}

impl<'de> Deserialize<'de> for PrivacyBox {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct File {
            entries: Vec<BoxEntry>,
        }
        let file = File::deserialize(de)?;
        let parsed = PrivacyBox { entries: file.entries };
        parsed.validate().map_err(|e| D::Error::custom(e.to_string()))?;
        Ok(parsed)
    }
}
