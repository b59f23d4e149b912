//! Privacy-named entities: categories, located spans and keyed sets.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::text;

/// Category of a privacy-named entity. Every category maps onto one
/// lowercase placeholder stem.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityCategory {
    Name,
    Location,
    Organization,
    Phone,
    Email,
    Other(String),
}

impl EntityCategory {
    /// Parse a category label, case-insensitively. Unknown labels become
    /// `Other` with the trimmed original text.
    pub fn parse(s: &str) -> EntityCategory {
        match s.trim().to_lowercase().as_str() {
            "name" | "person" => EntityCategory::Name,
            "location" | "address" => EntityCategory::Location,
            "organization" | "organisation" | "org" => EntityCategory::Organization,
            "phone" | "telephone" | "phone number" => EntityCategory::Phone,
            "email" | "e-mail" | "email address" => EntityCategory::Email,
            "" => EntityCategory::Other("other".into()),
            _ => EntityCategory::Other(s.trim().to_string()),
        }
    }

    /// Placeholder stem: always matches `^[a-z][a-z0-9_]*$`.
    pub fn stem(&self) -> String {
        match self {
            EntityCategory::Name => "name".into(),
            EntityCategory::Location => "location".into(),
            EntityCategory::Organization => "organization".into(),
            EntityCategory::Phone => "phone".into(),
            EntityCategory::Email => "email".into(),
            EntityCategory::Other(tag) => sanitize_stem(tag),
        }
    }

    /// Canonical label used on the wire and in box files.
    pub fn label(&self) -> &str {
        match self {
            EntityCategory::Name => "name",
            EntityCategory::Location => "location",
            EntityCategory::Organization => "organization",
            EntityCategory::Phone => "phone",
            EntityCategory::Email => "email",
            EntityCategory::Other(tag) => tag,
        }
    }
}

impl fmt::Display for EntityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for EntityCategory {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for EntityCategory {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Ok(EntityCategory::parse(&s))
    }
}

/// Map an arbitrary tag onto a valid placeholder stem.
fn sanitize_stem(tag: &str) -> String {
    let mut out = String::new();
    let mut last_underscore = true; // swallow leading separators
    for c in tag.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
            last_underscore = false;
        } else if !last_underscore {
            out.push('_');
            last_underscore = true;
        }
    }
    let out = out.trim_matches('_').to_string();
    if out.is_empty() {
        "other".to_string()
    } else if !out.chars().next().unwrap().is_ascii_lowercase() {
        format!("x{out}")
    } else {
        out
    }
}

/// One located entity occurrence. Offsets are character offsets into the
/// source text and the surface is the verbatim slice at those offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub surface: String,
    pub category: EntityCategory,
    pub start: usize,
    pub end: usize,
}

impl EntitySpan {
    pub fn new(surface: impl Into<String>, category: EntityCategory, start: usize, end: usize) -> Self {
        Self { surface: surface.into(), category, start, end }
    }

    pub fn key(&self) -> EntityKey {
        EntityKey::new(&self.surface, self.category.clone())
    }

    /// Check the substring invariant against the source text.
    pub fn locates_in(&self, source: &str) -> bool {
        text::char_slice(source, self.start, self.end).as_deref() == Some(self.surface.as_str())
    }
}

/// Identity of an entity: casefolded, whitespace-collapsed surface plus
/// category. Two spans with equal keys name the same entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityKey {
    pub surface: String,
    pub category: EntityCategory,
}

impl EntityKey {
    pub fn new(surface: &str, category: EntityCategory) -> Self {
        Self { surface: text::normalize(surface), category }
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.surface, self.category)
    }
}

/// Insertion-ordered set of entity spans, deduplicated by [`EntityKey`].
/// Equality compares keys only, ignoring order and offsets.
#[derive(Debug, Clone, Default)]
pub struct EntitySet {
    items: Vec<EntitySpan>,
    index: HashMap<EntityKey, usize>,
}

impl EntitySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_spans(spans: impl IntoIterator<Item = EntitySpan>) -> Self {
        let mut set = Self::new();
        for s in spans {
            set.insert(s);
        }
        set
    }

    /// Insert a span; returns false (and keeps the earlier span) when an
    /// entity with the same key is already present.
    pub fn insert(&mut self, span: EntitySpan) -> bool {
        let key = span.key();
        if self.index.contains_key(&key) {
            return false;
        }
        self.index.insert(key, self.items.len());
        self.items.push(span);
        true
    }

    pub fn contains_key(&self, key: &EntityKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn contains(&self, span: &EntitySpan) -> bool {
        self.contains_key(&span.key())
    }

    pub fn get(&self, key: &EntityKey) -> Option<&EntitySpan> {
        self.index.get(key).map(|&i| &self.items[i])
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Iterate in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &EntitySpan> {
        self.items.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = EntityKey> + '_ {
        self.items.iter().map(|s| s.key())
    }

    /// Entities present in both sets, keeping this set's spans and order.
    pub fn intersection(&self, other: &EntitySet) -> EntitySet {
        EntitySet::from_spans(
            self.items
                .iter()
                .filter(|s| other.contains_key(&s.key()))
                .cloned(),
        )
    }

    /// Entities of either set; this set's spans and order first, then the
    /// other's novel entities in its order.
    pub fn union(&self, other: &EntitySet) -> EntitySet {
        let mut out = self.clone();
        for s in other.iter() {
            out.insert(s.clone());
        }
        out
    }

    /// Entities present in exactly one set, in canonical key order so the
    /// result is independent of which set is `self`.
    pub fn symmetric_difference(&self, other: &EntitySet) -> EntitySet {
        let mut spans: Vec<EntitySpan> = self
            .items
            .iter()
            .filter(|s| !other.contains_key(&s.key()))
            .chain(other.items.iter().filter(|s| !self.contains_key(&s.key())))
            .cloned()
            .collect();
        spans.sort_by_key(|s| s.key());
        EntitySet::from_spans(spans)
    }

    pub fn is_subset_of(&self, other: &EntitySet) -> bool {
        self.items.iter().all(|s| other.contains_key(&s.key()))
    }

    pub fn sorted_keys(&self) -> Vec<EntityKey> {
        let mut keys: Vec<EntityKey> = self.keys().collect();
        keys.sort();
        keys
    }
}

impl PartialEq for EntitySet {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.is_subset_of(other)
    }
}

impl Eq for EntitySet {}

impl FromIterator<EntitySpan> for EntitySet {
    fn from_iter<T: IntoIterator<Item = EntitySpan>>(iter: T) -> Self {
        Self::from_spans(iter)
    }
}
