//! Local privacy-entity recognition.
//!
//! The built-in recognizer combines regex patterns (phone numbers, email
//! addresses) with gazetteer lookup (names, locations, organizations).
//! Candidates are word-bounded and case-insensitive; overlaps resolve
//! longest-match-first, then leftmost. Alternatively an external NER
//! service can supply the local view over a one-endpoint HTTP protocol.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use crate::entity::{EntityCategory, EntitySpan, EntitySet};
use crate::text;
use crate::{Error, Result};

fn email_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9][A-Za-z0-9.-]*\.[A-Za-z]{2,}").unwrap()
    })
}

fn phone_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Separated digit groups with optional country code and parens, or a
    // long unseparated digit run. Boundaries are enforced afterwards.
    RE.get_or_init(|| {
        Regex::new(r"\+?\(?\d{1,4}\)?(?:[ .-]\(?\d{2,5}\)?){1,4}|\+?\d{7,15}").unwrap()
    })
}

/// Built-in pattern/gazetteer recognizer.
pub struct PnerRecognizer {
    /// Gazetteer terms as char sequences, with their categories.
    terms: Vec<(Vec<char>, EntityCategory)>,
}

impl PnerRecognizer {
    /// Load gazetteers, one term per line; `#` lines are comments.
    pub fn from_files(gazetteers: &[(EntityCategory, &Path)]) -> Result<Self> {
        let mut sources = Vec::new();
        for (cat, path) in gazetteers {
            let body = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("gazetteer {}: {e}", path.display()))
            })?;
            sources.push((cat.clone(), body));
        }
        Ok(Self::from_sources(
            sources.iter().map(|(c, b)| (c.clone(), b.as_str())),
        ))
    }

    pub fn from_sources<'a>(sources: impl IntoIterator<Item = (EntityCategory, &'a str)>) -> Self {
        let mut terms = Vec::new();
        for (cat, body) in sources {
            for line in body.lines() {
                let term = line.trim();
                if term.is_empty() || term.starts_with('#') {
                    continue;
                }
                terms.push((term.chars().collect(), cat.clone()));
            }
        }
        Self { terms }
    }

    /// Scan a text. Deterministic: equal inputs give equal outputs.
    pub fn identify(&self, task_text: &str) -> EntitySet {
        let chars: Vec<char> = task_text.chars().collect();
        // Map byte offsets (regex) to char offsets.
        let mut byte_to_char: HashMap<usize, usize> = HashMap::new();
        for (ci, (bi, _)) in task_text.char_indices().enumerate() {
            byte_to_char.insert(bi, ci);
        }
        byte_to_char.insert(task_text.len(), chars.len());

        let mut candidates: Vec<(usize, usize, EntityCategory)> = Vec::new();
        for (re, cat) in [(email_re(), EntityCategory::Email), (phone_re(), EntityCategory::Phone)] {
            for m in re.find_iter(task_text) {
                let (Some(&start), Some(&end)) =
                    (byte_to_char.get(&m.start()), byte_to_char.get(&m.end()))
                else {
                    continue;
                };
                let (start, end) = if cat == EntityCategory::Phone {
                    trim_unbalanced_parens(&chars, start, end)
                } else {
                    (start, end)
                };
                if start >= end {
                    continue;
                }
                if start > 0 && text::is_word_char(chars[start - 1]) {
                    continue;
                }
                if end < chars.len() && text::is_word_char(chars[end]) {
                    continue;
                }
                candidates.push((start, end, cat.clone()));
            }
        }
        for (term, cat) in &self.terms {
            for (start, end) in text::word_bounded_matches(&chars, term) {
                candidates.push((start, end, cat.clone()));
            }
        }

        let chosen = resolve_overlaps(candidates);
        let mut set = EntitySet::new();
        for (start, end, cat) in chosen {
            let surface: String = chars[start..end].iter().collect();
            set.insert(EntitySpan::new(surface, cat, start, end));
        }
        set
    }
}

/// Drop parentheses a phone match swallowed from the surrounding text:
/// a trailing `)` with no `(` inside the match, or a leading `(` with
/// no `)`. Grouped digits like `(212) 555` stay intact.
fn trim_unbalanced_parens(chars: &[char], mut start: usize, mut end: usize) -> (usize, usize) {
    while start < end {
        let open = chars[start..end].iter().filter(|&&c| c == '(').count();
        let close = chars[start..end].iter().filter(|&&c| c == ')').count();
        if close > open && chars[end - 1] == ')' {
            end -= 1;
        } else if open > close && chars[start] == '(' {
            start += 1;
        } else {
            break;
        }
    }
    (start, end)
}

/// Longest-match-first, then leftmost, then stable category order.
/// Returns the surviving candidates sorted by start offset.
fn resolve_overlaps(
    mut candidates: Vec<(usize, usize, EntityCategory)>,
) -> Vec<(usize, usize, EntityCategory)> {
    candidates.sort_by(|a, b| {
        (b.1 - b.0)
            .cmp(&(a.1 - a.0))
            .then(a.0.cmp(&b.0))
            .then(a.2.cmp(&b.2))
    });
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::new();
    for (start, end, cat) in candidates {
        if taken.iter().any(|&(s, e)| start < e && s < end) {
            continue;
        }
        taken.push((start, end));
        out.push((start, end, cat));
    }
    out.sort_by_key(|c| c.0);
    out
}

/// The local view: either the built-in recognizer or an external NER
/// service.
pub enum Recognizer {
    Builtin(PnerRecognizer),
    External(ExternalNer),
}

impl Recognizer {
    pub async fn identify(&self, task_text: &str) -> Result<EntitySet> {
        match self {
            Recognizer::Builtin(r) => Ok(r.identify(task_text)),
            Recognizer::External(r) => r.identify(task_text).await,
        }
    }
}

/// Adapter for an external NER service: `POST {"text": ...}` returning a
/// JSON array of `{surface, category, start, end}` spans with character
/// offsets into the submitted text.
pub struct ExternalNer {
    url: String,
    client: reqwest::Client,
}

#[derive(Serialize)]
struct NerRequest<'a> {
    text: &'a str,
}

impl ExternalNer {
    pub fn new(url: impl Into<String>) -> Self {
        Self { url: url.into(), client: reqwest::Client::new() }
    }

    pub async fn identify(&self, task_text: &str) -> Result<EntitySet> {
        let resp = self
            .client
            .post(&self.url)
            .json(&NerRequest { text: task_text })
            .send()
            .await
            .map_err(|e| Error::Recognizer(format!("service {} unreachable: {e}", self.url)))?;
        let status = resp.status();
        let body = resp.text().await.unwrap_or_default();
        if !status.is_success() {
            return Err(Error::Recognizer(format!(
                "service {} returned status {}: {}",
                self.url,
                status.as_u16(),
                Error::excerpt(&body)
            )));
        }
        let spans: Vec<EntitySpan> = serde_json::from_str(&body).map_err(|e| {
            Error::Recognizer(format!(
                "malformed payload from {}: {e}: {}",
                self.url,
                Error::excerpt(&body)
            ))
        })?;
        let mut set = EntitySet::new();
        let mut occupied: Vec<(usize, usize)> = Vec::new();
        for span in spans {
            if !span.locates_in(task_text) {
                return Err(Error::Recognizer(format!(
                    "span \"{}\" does not match text at offsets {}..{}",
                    span.surface, span.start, span.end
                )));
            }
            if occupied.iter().any(|&(s, e)| span.start < e && s < span.end) {
                return Err(Error::Recognizer(format!(
                    "overlapping span \"{}\" at {}..{}",
                    span.surface, span.start, span.end
                )));
            }
            occupied.push((span.start, span.end));
            set.insert(span);
        }
        Ok(set)
    }
}
