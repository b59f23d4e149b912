//! The two relevance views: embedding similarity between domain phrases
//! and reference domains, and TF-IDF keyword matching against per-domain
//! keyword documents.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::{ElementaryVector, HighOrderMatrix, ReferenceDomainSet};
use crate::numeric::{cosine, EmbeddingTable, Scalar};
use crate::text;
use crate::{Error, Result};

/// Stopwords removed before TF-IDF scoring.
#[derive(Debug, Clone, Default)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("stopword file {}: {e}", path.display())))?;
        Ok(Self::from_text(&body))
    }

    pub fn from_text(body: &str) -> Self {
        let words = body
            .split_whitespace()
            .map(|w| w.to_lowercase())
            .filter(|w| !w.starts_with('#'))
            .collect();
        Self { words }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Keyword documents, one per reference domain, tokenized with the
/// stopwords already removed. Column order follows the domain list.
#[derive(Debug, Clone)]
pub struct DomainCorpus {
    token_sets: Vec<HashSet<String>>,
}

impl DomainCorpus {
    /// Load a JSON object mapping domain name → keyword document text.
    /// Every reference domain must be present; extra keys are ignored.
    pub fn load(path: &Path, domains: &ReferenceDomainSet, stopwords: &StopwordSet) -> Result<Self> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("domain corpus {}: {e}", path.display())))?;
        let map: HashMap<String, String> = serde_json::from_str(&body)
            .map_err(|e| Error::Config(format!("domain corpus {}: {e}", path.display())))?;
        let docs: Result<Vec<&str>> = domains
            .names()
            .iter()
            .map(|name| {
                map.get(name).map(String::as_str).ok_or_else(|| {
                    Error::Config(format!(
                        "domain corpus {} lacks a document for \"{name}\"",
                        path.display()
                    ))
                })
            })
            .collect();
        Ok(Self::from_texts(&docs?, stopwords))
    }

    pub fn from_texts(docs: &[&str], stopwords: &StopwordSet) -> Self {
        let token_sets = docs
            .iter()
            .map(|doc| {
                text::tokenize(doc)
                    .into_iter()
                    .filter(|t| !stopwords.contains(t))
                    .collect()
            })
            .collect();
        Self { token_sets }
    }

    pub fn len(&self) -> usize {
        self.token_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_sets.is_empty()
    }
}

/// N×M cosine-similarity matrix between the N domain phrases and the M
/// reference domains, both mean-pooled through the embedding table.
pub fn highorder_matrix<F: Scalar>(
    phrases: &[String],
    domains: &ReferenceDomainSet,
    embedder: &EmbeddingTable<F>,
) -> HighOrderMatrix<F> {
    let domain_vecs: Vec<Vec<F>> = domains.names().iter().map(|d| embedder.embed(d)).collect();
    let rows = phrases
        .iter()
        .map(|phrase| {
            let pv = embedder.embed(phrase);
            domain_vecs.iter().map(|dv| cosine(&pv, dv)).collect()
        })
        .collect();
    HighOrderMatrix::new(rows)
}

/// TF-IDF keyword relevance of the task against each domain document.
///
/// `entry_j = Σ_t tf(t) · idf(t) · [t ∈ doc_j]` over the task's
/// non-stopword tokens, with `idf = ln(M / df)` and no smoothing.
pub fn tfidf_vector<F: Scalar>(
    task_text: &str,
    corpus: &DomainCorpus,
    stopwords: &StopwordSet,
) -> ElementaryVector<F> {
    let m = corpus.token_sets.len();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for token in text::tokenize(task_text) {
        if !stopwords.contains(&token) {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut values = vec![F::zero(); m];
    for (token, tf) in counts {
        let df = corpus
            .token_sets
            .iter()
            .filter(|set| set.contains(&token))
            .count();
        if df == 0 {
            continue;
        }
        let idf = (m as f64 / df as f64).ln();
        let weight = F::from_f64(tf as f64 * idf).unwrap();
        for (j, set) in corpus.token_sets.iter().enumerate() {
            if set.contains(&token) {
                values[j] = values[j] + weight;
            }
        }
    }
    ElementaryVector { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::EmbeddingTable;

    fn toy_domains() -> ReferenceDomainSet {
        ReferenceDomainSet::new(vec!["History".into(), "Finance".into()]).unwrap()
    }

    #[test]
    fn matrix_rows_are_cosines_in_range() {
        let table = EmbeddingTable::from_pairs(&[
            ("history", [1.0f64, 0.0].as_slice()),
            ("finance", [0.0, 1.0].as_slice()),
            ("war", [0.8, 0.2].as_slice()),
        ]);
        let phrases = vec!["war".to_string(), "history".to_string()];
        let m = highorder_matrix(&phrases, &toy_domains(), &table);
        assert_eq!(m.rows().len(), 2);
        for row in m.rows() {
            assert_eq!(row.len(), 2);
            for &x in row {
                assert!((-1.0..=1.0).contains(&x));
            }
        }
        // A phrase equal to an in-vocabulary reference name peaks at its
        // own column.
        assert!((m.rows()[1][0] - 1.0).abs() < 1e-12);
        assert!(m.rows()[1][0] > m.rows()[1][1]);
    }

    #[test]
    fn oov_phrase_gives_zero_row() {
        let table = EmbeddingTable::from_pairs(&[("history", [1.0f64, 0.0].as_slice())]);
        let phrases = vec!["quantum blockchain".to_string()];
        let m = highorder_matrix(&phrases, &toy_domains(), &table);
        assert_eq!(m.rows()[0], vec![0.0, 0.0]);
    }

    #[test]
    fn tfidf_hand_computation() {
        // M = 2. Documents: d0 = {war, empire}, d1 = {bank, war}.
        let stops = StopwordSet::from_text("the a of");
        let corpus = DomainCorpus::from_texts(&["war empire", "bank war"], &stops);
        // Task tokens after stopword removal: war ×2, bank ×1.
        let v: ElementaryVector<f64> =
            tfidf_vector("The war of the war bank", &corpus, &stops);
        // idf(war) = ln(2/2) = 0; idf(bank) = ln(2/1).
        let ln2 = std::f64::consts::LN_2;
        assert!((v.values[0] - 0.0).abs() < 1e-12);
        assert!((v.values[1] - ln2).abs() < 1e-12);
    }

    #[test]
    fn tfidf_no_overlap_is_zero() {
        let stops = StopwordSet::empty();
        let corpus = DomainCorpus::from_texts(&["alpha beta", "gamma"], &stops);
        let v: ElementaryVector<f64> = tfidf_vector("delta epsilon", &corpus, &stops);
        assert_eq!(v.values, vec![0.0, 0.0]);
        let v: ElementaryVector<f64> = tfidf_vector("", &corpus, &stops);
        assert_eq!(v.values, vec![0.0, 0.0]);
    }

    #[test]
    fn tfidf_single_document_token() {
        let stops = StopwordSet::empty();
        let corpus = DomainCorpus::from_texts(&["ledger audit", "verdict court"], &stops);
        let v: ElementaryVector<f64> = tfidf_vector("the court ruled", &corpus, &stops);
        assert_eq!(v.values[0], 0.0);
        assert!(v.values[1] > 0.0);
    }

    #[test]
    fn tfidf_is_nonnegative() {
        let stops = StopwordSet::empty();
        let corpus = DomainCorpus::from_texts(&["a b c", "b c d", "c d e"], &stops);
        let v: ElementaryVector<f64> = tfidf_vector("a b c d e a", &corpus, &stops);
        for &x in &v.values {
            assert!(x >= 0.0);
        }
    }

    #[test]
    fn corpus_loader_requires_every_domain() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.json");
        std::fs::write(&path, r#"{"History": "war empire"}"#).unwrap();
        let err = DomainCorpus::load(&path, &toy_domains(), &StopwordSet::empty());
        match err {
            Err(Error::Config(msg)) => assert!(msg.contains("Finance")),
            other => panic!("expected config error, got {:?}", other.map(|c| c.len())),
        }
        std::fs::write(&path, r#"{"History": "war", "Finance": "bank", "Extra": "x"}"#).unwrap();
        let corpus = DomainCorpus::load(&path, &toy_domains(), &StopwordSet::empty()).unwrap();
        assert_eq!(corpus.len(), 2);
    }

    #[test]
    fn stopword_set_parsing() {
        let stops = StopwordSet::from_text("The\nof\n# comment\nand");
        assert!(stops.contains("the"));
        assert!(stops.contains("and"));
        assert!(!stops.contains("# comment"));
        assert!(!stops.contains("war"));
    }
}
