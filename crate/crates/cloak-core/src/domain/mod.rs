//! Domain-rule knowledge routing.
//!
//! An anonymized task is scored against a fixed list of reference
//! domains from two views — embedding similarity of agent-named domain
//! phrases ([`relevance::highorder_matrix`]) and a TF-IDF keyword match
//! ([`relevance::tfidf_vector`]) — blended, and the top-K domains each
//! drive one IF/THEN expert rule whose answers are fused into a draft.

pub mod analyze;
pub mod relevance;
pub mod rules;

pub use analyze::{analyze_domains, DomainAnalysis};
pub use relevance::{highorder_matrix, tfidf_vector, DomainCorpus, StopwordSet};
pub use rules::{
    build_expert_prompt, evaluate_rules, fuse_answers, membership_term, FusedAnswer,
    MembershipOutcome, RuleOutput,
};

use serde::{Deserialize, Serialize};

use crate::numeric::{max_normalize, Scalar};
use crate::{Error, Result};

/// The fixed list of reference domains, in rank order. Order matters:
/// it breaks score ties and names matrix columns.
#[derive(Debug, Clone)]
pub struct ReferenceDomainSet {
    names: Vec<String>,
}

/// Default reference domains shipped with the pipeline.
pub const DEFAULT_DOMAINS: &[&str] = &[
    "Entertainment",
    "Finance",
    "History",
    "Law",
    "Sociology",
    "Arts",
    "Literature",
    "Medicine",
    "Politics",
    "Sports",
    "Technology",
    "Business",
    "Communication",
    "Science",
    "Education",
    "Environment",
    "Agriculture",
    "Philosophy",
    "Transportation",
    "Psychology",
];

impl ReferenceDomainSet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Config("reference domain list must not be empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if n.trim().is_empty() {
                return Err(Error::Config("reference domain names must not be empty".into()));
            }
            if !seen.insert(n.trim().to_lowercase()) {
                return Err(Error::Config(format!("duplicate reference domain \"{n}\"")));
            }
        }
        Ok(Self { names })
    }

    pub fn default_set() -> Self {
        Self::new(DEFAULT_DOMAINS.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// N×M matrix of cosine similarities between N task-domain phrases and
/// the M reference domains.
#[derive(Debug, Clone, PartialEq)]
pub struct HighOrderMatrix<F: Scalar = crate::Real> {
    rows: Vec<Vec<F>>,
}

impl<F: Scalar> HighOrderMatrix<F> {
    pub fn new(rows: Vec<Vec<F>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<F>] {
        &self.rows
    }

    /// Column-wise maximum: the best score any phrase gave each domain.
    pub fn collapse_max(&self) -> Vec<F> {
        let Some(first) = self.rows.first() else {
            return Vec::new();
        };
        let mut out = first.clone();
        for row in &self.rows[1..] {
            for (o, x) in out.iter_mut().zip(row) {
                *o = o.max(*x);
            }
        }
        out
    }
}

/// 1×M keyword-relevance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryVector<F: Scalar = crate::Real> {
    pub values: Vec<F>,
}

/// The selected target domains with their blended scores, rank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDomains {
    pub domains: Vec<TargetDomain>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDomain {
    pub name: String,
    pub score: crate::Real,
}

/// Blend the two relevance views and keep the top-K domains.
///
/// The keyword vector is max-normalized to `[0, 1]` first; the matrix
/// collapses by column-wise max. `blend = alpha·high_order +
/// (1−alpha)·keyword`. Ties break by reference-list order; `k` is
/// clamped to the number of domains.
pub fn select_topk<F: Scalar>(
    rho: &HighOrderMatrix<F>,
    relm: &ElementaryVector<F>,
    alpha: F,
    k: usize,
    domains: &ReferenceDomainSet,
) -> Result<Vec<(String, F)>> {
    let m = domains.len();
    if relm.values.len() != m {
        return Err(Error::Config(format!(
            "keyword vector has {} entries for {m} domains",
            relm.values.len()
        )));
    }
    for row in rho.rows() {
        if row.len() != m {
            return Err(Error::Config(format!(
                "similarity matrix row has {} entries for {m} domains",
                row.len()
            )));
        }
    }
    if alpha < F::zero() || alpha > F::one() {
        return Err(Error::Config("alpha must lie in [0, 1]".into()));
    }
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    let collapsed = if rho.rows().is_empty() {
        vec![F::zero(); m]
    } else {
        rho.collapse_max()
    };
    let keyword = max_normalize(&relm.values);
    let one = F::one();
    let blended: Vec<F> = collapsed
        .iter()
        .zip(&keyword)
        .map(|(h, e)| alpha * *h + (one - alpha) * *e)
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        blended[b]
            .partial_cmp(&blended[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(order
        .into_iter()
        .take(k.min(m))
        .map(|i| (domains.names()[i].clone(), blended[i]))
        .collect())
}

/// Fuzzy membership rating an agent assigns a (task, domain) pair.
/// Declaration order is ascending strength, so `Ord` ranks correctly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MembershipTerm {
    #[serde(rename = "Extremely Low")]
    ExtremelyLow,
    #[serde(rename = "Low")]
    Low,
    #[serde(rename = "Medium")]
    Medium,
    #[serde(rename = "Moderately High")]
    ModeratelyHigh,
    #[serde(rename = "High")]
    High,
    #[serde(rename = "Extremely High")]
    ExtremelyHigh,
}

impl MembershipTerm {
    pub const ALL: [MembershipTerm; 6] = [
        MembershipTerm::ExtremelyLow,
        MembershipTerm::Low,
        MembershipTerm::Medium,
        MembershipTerm::ModeratelyHigh,
        MembershipTerm::High,
        MembershipTerm::ExtremelyHigh,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            MembershipTerm::ExtremelyLow => "Extremely Low",
            MembershipTerm::Low => "Low",
            MembershipTerm::Medium => "Medium",
            MembershipTerm::ModeratelyHigh => "Moderately High",
            MembershipTerm::High => "High",
            MembershipTerm::ExtremelyHigh => "Extremely High",
        }
    }

    /// Find a term in a free-form reply, case-insensitively and word-
    /// bounded. Multi-word terms are tried before their single-word
    /// suffixes, so "moderately high" never reads as "high".
    pub fn parse(reply: &str) -> Option<MembershipTerm> {
        const ORDERED: [MembershipTerm; 6] = [
            MembershipTerm::ExtremelyHigh,
            MembershipTerm::ExtremelyLow,
            MembershipTerm::ModeratelyHigh,
            MembershipTerm::High,
            MembershipTerm::Low,
            MembershipTerm::Medium,
        ];
        ORDERED
            .into_iter()
            .find(|t| crate::text::contains_word_bounded(reply, t.label()))
    }
}

impl std::fmt::Display for MembershipTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
