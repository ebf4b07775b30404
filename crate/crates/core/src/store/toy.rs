//! Deterministic hash-seeded embedder for self-contained runs.
//!
//! Every token maps to a fixed pseudorandom unit vector seeded by a SHA-256
//! of its text. An occurrence vector is the normalized sum of the vectors of
//! the keyword token and its `window` neighbors on each side, so identical
//! context windows give identical vectors and unrelated contexts are close to
//! orthogonal.

use std::collections::HashMap;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{EmbeddingProvider, StoreError};
use crate::keywords::Token;

/// Unit vector for a token.
pub fn token_vector(token: &str, d: usize) -> Vec<f64> {
    let digest = Sha256::digest(token.as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(seed);
    let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn check(n_tokens: usize, position: usize, d: usize) -> Result<(), StoreError> {
    if d < 2 {
        return Err(StoreError::Embed(format!("dimension must be >= 2, got {d}")));
    }
    if position >= n_tokens {
        return Err(StoreError::Embed(format!("position {position} out of range for {n_tokens} tokens")));
    }
    Ok(())
}

/// Context vector of the token at `position`.
pub fn toy_embed<S: AsRef<str>>(tokens: &[S], position: usize, d: usize, window: usize) -> Result<Vec<f64>, StoreError> {
    check(tokens.len(), position, d)?;
    let lo = position.saturating_sub(window);
    let hi = (position + window).min(tokens.len() - 1);
    let mut acc = vec![0.0; d];
    for t in &tokens[lo..=hi] {
        for (a, x) in acc.iter_mut().zip(token_vector(t.as_ref(), d)) {
            *a += x;
        }
    }
    normalize(&mut acc);
    Ok(acc)
}

/// Cached embedder implementing [`EmbeddingProvider`]; multiword spans use
/// the normalized mean of the per-position vectors.
#[derive(Debug, Clone)]
pub struct ToyEmbedder {
    dim: usize,
    window: usize,
    cache: HashMap<String, Vec<f64>>,
}

impl ToyEmbedder {
    pub fn new(dim: usize, window: usize) -> Result<Self, StoreError> {
        if dim < 2 {
            return Err(StoreError::Embed(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(ToyEmbedder { dim, window, cache: HashMap::new() })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn token(&mut self, token: &str) -> &[f64] {
        let d = self.dim;
        self.cache.entry(token.to_string()).or_insert_with(|| token_vector(token, d))
    }

    fn at(&mut self, tokens: &[Token], position: usize) -> Vec<f64> {
        let lo = position.saturating_sub(self.window);
        let hi = (position + self.window).min(tokens.len() - 1);
        let mut acc = vec![0.0; self.dim];
        for t in &tokens[lo..=hi] {
            for (a, x) in acc.iter_mut().zip(self.token(&t.norm)) {
                *a += x;
            }
        }
        normalize(&mut acc);
        acc
    }
}

impl EmbeddingProvider for ToyEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&mut self, tokens: &[Token], span: Range<usize>) -> Result<Vec<f64>, StoreError> {
        if span.is_empty() {
            return Err(StoreError::Embed("empty keyword span".into()));
        }
        check(tokens.len(), span.end - 1, self.dim)?;
        let mut acc = vec![0.0; self.dim];
        for p in span {
            for (a, x) in acc.iter_mut().zip(self.at(tokens, p)) {
                *a += x;
            }
        }
        normalize(&mut acc);
        Ok(acc)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "name": "toy",
            "dimension": self.dim,
            "window": self.window,
            "span_pooling": "mean",
        })
    }
}
