//! Metric suite: precision/recall/F1 over entity keys, uniform-weight
//! BLEU, target-mention score and embedding cosine similarity.

pub mod dataset;

pub use dataset::{load_dataset, DatasetKind, GoldEntity, TaskInstance};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::entity::EntitySet;
use crate::numeric::{cosine, EmbeddingTable, Scalar};
use crate::{Error, Result};

/// Micro-aggregable confusion counts over entity keys.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl ConfusionCounts {
    pub fn from_sets(predicted: &EntitySet, gold: &EntitySet) -> Self {
        let tp = predicted.iter().filter(|s| gold.contains_key(&s.key())).count();
        Self {
            true_positives: tp,
            false_positives: predicted.len() - tp,
            false_negatives: gold.len() - tp,
        }
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
    }
}

/// Precision, recall and F1 from confusion counts; 0/0 ratios are 0.
pub fn prf1_from_counts<F: Scalar>(c: &ConfusionCounts) -> (F, F, F) {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            F::zero()
        } else {
            F::from_usize(num).unwrap() / F::from_usize(den).unwrap()
        }
    };
    let precision = ratio(c.true_positives, c.true_positives + c.false_positives);
    let recall = ratio(c.true_positives, c.true_positives + c.false_negatives);
    let f1 = ratio(
        2 * c.true_positives,
        2 * c.true_positives + c.false_positives + c.false_negatives,
    );
    (precision, recall, f1)
}

/// Precision, recall and F1 of a predicted entity set against a gold
/// set, matching on entity keys.
pub fn prf1<F: Scalar>(predicted: &EntitySet, gold: &EntitySet) -> (F, F, F) {
    prf1_from_counts(&ConfusionCounts::from_sets(predicted, gold))
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window.join("\u{1f}")).or_insert(0) += 1;
        }
    }
    counts
}

/// Uniform-weight BLEU of a candidate against one or more references.
///
/// Tokens are lowercase whitespace splits. Modified n-gram precision is
/// clipped per the maximum reference count; the brevity penalty uses the
/// reference length closest to the candidate's (ties toward the shorter
/// reference). Any zero n-gram precision, or an empty candidate, makes
/// the score 0.
pub fn bleu<F: Scalar>(candidate: &str, references: &[&str], max_n: usize) -> F {
    assert!(max_n >= 1, "bleu needs at least unigrams");
    let cand: Vec<String> = candidate
        .to_lowercase()
        .split_whitespace()
        .map(str::to_string)
        .collect();
    if cand.is_empty() || references.is_empty() {
        return F::zero();
    }
    let refs: Vec<Vec<String>> = references
        .iter()
        .map(|r| r.to_lowercase().split_whitespace().map(str::to_string).collect())
        .collect();

    let c = cand.len();
    let r = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap();

    let mut log_sum = 0.0f64;
    for n in 1..=max_n {
        if c < n {
            return F::zero();
        }
        let cand_counts = ngram_counts(&cand, n);
        let total: usize = c - n + 1;
        let mut clipped = 0usize;
        for (gram, count) in &cand_counts {
            let max_ref = refs
                .iter()
                .map(|r| ngram_counts(r, n).get(gram).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            clipped += (*count).min(max_ref);
        }
        if clipped == 0 {
            return F::zero();
        }
        log_sum += (clipped as f64 / total as f64).ln() / max_n as f64;
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    F::from_f64(bp * log_sum.exp()).unwrap()
}

/// Fraction of questions whose output mentions a target: a question
/// counts as answered when any of its target strings occurs, casefolded,
/// in the corresponding output. Outputs align with instances one-to-one,
/// concatenating each instance's questions in order.
pub fn score<F: Scalar>(outputs: &[String], instances: &[TaskInstance]) -> Result<F> {
    if outputs.len() != instances.len() {
        return Err(Error::Eval(format!(
            "{} outputs for {} instances",
            outputs.len(),
            instances.len()
        )));
    }
    let mut total = 0usize;
    let mut correct = 0usize;
    for (output, instance) in outputs.iter().zip(instances) {
        let haystack = output.to_lowercase();
        for targets in &instance.targets {
            total += 1;
            if targets
                .iter()
                .any(|t| !t.trim().is_empty() && haystack.contains(&t.to_lowercase()))
            {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Ok(F::zero());
    }
    Ok(F::from_usize(correct).unwrap() / F::from_usize(total).unwrap())
}

/// Cosine similarity of two texts' mean-pooled embeddings; 0 when either
/// side embeds to the zero vector.
pub fn similarity<F: Scalar>(a: &str, b: &str, embedder: &EmbeddingTable<F>) -> F {
    cosine(&embedder.embed(a), &embedder.embed(b))
}
