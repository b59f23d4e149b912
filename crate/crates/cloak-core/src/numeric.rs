//! Scalar-generic numeric kernels and the static word-embedding table.
//!
//! Everything here is generic over [`Scalar`] so the same kernels serve
//! f32 tables and f64 tables; the rest of the crate pins [`crate::Real`].

use std::collections::HashMap;
use std::fmt::Debug;
use std::path::Path;

use num_traits::{Float, FromPrimitive};

use crate::{Error, Result};

/// Floating-point scalar usable by the vector kernels.
pub trait Scalar:
    Float + FromPrimitive + std::iter::Sum + Debug + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> F {
    let (na, nb) = (norm(a), norm(b));
    if na.is_zero() || nb.is_zero() {
        F::zero()
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Divide by the maximum entry when it is positive; otherwise return the
/// input unchanged.
pub fn max_normalize<F: Scalar>(v: &[F]) -> Vec<F> {
    let max = v.iter().cloned().fold(F::zero(), F::max);
    if max > F::zero() {
        v.iter().map(|x| *x / max).collect()
    } else {
        v.to_vec()
    }
}

/// Element-wise mean of equally sized rows; empty input gives the zero
/// vector of the stated dimension.
pub fn mean_rows<F: Scalar>(rows: &[&[F]], dim: usize) -> Vec<F> {
    let mut acc = vec![F::zero(); dim];
    if rows.is_empty() {
        return acc;
    }
    for row in rows {
        for (a, x) in acc.iter_mut().zip(*row) {
            *a = *a + *x;
        }
    }
    let n = F::from_usize(rows.len()).unwrap();
    for a in acc.iter_mut() {
        *a = *a / n;
    }
    acc
}

/// Static token-to-vector table with mean-pooled text embedding.
///
/// File format: one token per line followed by its components, all
/// whitespace-separated. The first line fixes the dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable<F: Scalar = crate::Real> {
    dim: usize,
    vectors: HashMap<String, Vec<F>>,
}

impl<F: Scalar> EmbeddingTable<F> {
    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("embedding file {}: {e}", path.display())))?;
        Self::parse(&body).map_err(|(line, msg)| {
            Error::Config(format!("embedding file {} line {line}: {msg}", path.display()))
        })
    }

    fn parse(body: &str) -> std::result::Result<Self, (usize, String)> {
        let mut dim = 0usize;
        let mut vectors = HashMap::new();
        for (i, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap().to_lowercase();
            let comps: std::result::Result<Vec<F>, _> = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| (i + 1, format!("bad component \"{f}\": {e}")))
                        .map(|v| F::from_f64(v).unwrap())
                })
                .collect();
            let comps = comps?;
            if comps.is_empty() {
                return Err((i + 1, "token has no components".into()));
            }
            if dim == 0 {
                dim = comps.len();
            } else if comps.len() != dim {
                return Err((
                    i + 1,
                    format!("expected {dim} components, found {}", comps.len()),
                ));
            }
            vectors.insert(token, comps);
        }
        if vectors.is_empty() {
            return Err((0, "no vectors found".into()));
        }
        Ok(Self { dim, vectors })
    }

    /// Build a table from literal pairs; panics on inconsistent dims.
    pub fn from_pairs(pairs: &[(&str, &[F])]) -> Self {
        let dim = pairs.first().map(|(_, v)| v.len()).unwrap_or(0);
        let mut vectors = HashMap::new();
        for (tok, v) in pairs {
            assert_eq!(v.len(), dim, "inconsistent embedding dimensions");
            vectors.insert(tok.to_lowercase(), v.to_vec());
        }
        Self { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, token: &str) -> Option<&[F]> {
        self.vectors.get(&token.to_lowercase()).map(|v| v.as_slice())
    }

    /// Mean-pooled embedding of the text's tokens. Out-of-vocabulary
    /// tokens contribute zero vectors; a text with no tokens, or with no
    /// known tokens, embeds to the zero vector.
    pub fn embed(&self, text: &str) -> Vec<F> {
        let tokens = crate::text::tokenize(text);
        if tokens.is_empty() {
            return vec![F::zero(); self.dim];
        }
        let zero = vec![F::zero(); self.dim];
        let rows: Vec<&[F]> = tokens
            .iter()
            .map(|t| self.get(t).unwrap_or(zero.as_slice()))
            .collect();
        mean_rows(&rows, self.dim)
    }
}
