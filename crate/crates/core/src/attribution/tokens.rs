//! Ranking context tokens by their Integrated Gradients attribution.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::ig::{integrated_gradients, Differentiable};
use super::{AttributionError, TurnTokens};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenScore {
    pub token: String,
    pub score: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributionOptions {
    pub k: usize,
    /// Tokens must occur strictly more often than this percentile of the
    /// per-token counts over both corpora.
    pub percentile: f64,
    pub steps: usize,
}

impl Default for AttributionOptions {
    fn default() -> Self {
        AttributionOptions { k: 10, percentile: 95.0, steps: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributionReport {
    pub topic: String,
    /// Positive scores, descending.
    pub tokens_a: Vec<TokenScore>,
    /// Negative scores, ascending.
    pub tokens_b: Vec<TokenScore>,
    pub frequency_floor: f64,
    /// Count a token had to exceed.
    pub frequency_threshold: f64,
    pub keyword_excluded: bool,
    pub excluded: Vec<String>,
    pub aggregation: &'static str,
    pub diagnostics: Vec<String>,
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

/// Mean that does not depend on input order and satisfies
/// `symmetric_mean(-x) == -symmetric_mean(x)` bit for bit: positive and
/// negative parts are summed separately in order of magnitude.
fn symmetric_mean(values: &[f64]) -> f64 {
    let part = |keep: fn(&f64) -> bool| {
        let mut v: Vec<f64> = values.iter().copied().filter(keep).map(f64::abs).collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>()
    };
    (part(|x| *x > 0.0) - part(|x| *x < 0.0)) / values.len() as f64
}

/// Per-occurrence score is the sum over dimensions of the token's IG row;
/// a token's score is the mean over its occurrences in both corpora.
pub fn token_attributions<M: Differentiable + Sync>(
    model: &M,
    corpus_a: &[TurnTokens],
    corpus_b: &[TurnTokens],
    topic: &str,
    excluded: &BTreeSet<String>,
    opts: &AttributionOptions,
) -> Result<AttributionReport, AttributionError> {
    if corpus_a.is_empty() || corpus_b.is_empty() {
        return Err(AttributionError::Options("both corpora must be nonempty".into()));
    }
    let per_turn = corpus_a
        .par_iter()
        .chain(corpus_b.par_iter())
        .map(|t| {
            let ig = integrated_gradients(model, &t.vectors, None, opts.steps)?;
            Ok(t.tokens.iter().cloned().zip(ig.iter().map(|row| row.iter().sum::<f64>())).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, AttributionError>>()?;

    let mut occurrences: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (token, score) in per_turn.into_iter().flatten() {
        occurrences.entry(token).or_default().push(score);
    }
    let counts: Vec<f64> = occurrences.values().map(|v| v.len() as f64).collect();
    let threshold = percentile(&counts, opts.percentile)
        .ok_or_else(|| AttributionError::Options(format!("percentile {} outside [0, 100]", opts.percentile)))?;

    let mut scored: Vec<TokenScore> = occurrences
        .into_iter()
        .filter(|(tok, occ)| occ.len() as f64 > threshold && !excluded.contains(tok))
        .map(|(token, occ)| TokenScore { score: symmetric_mean(&occ), count: occ.len(), token })
        .collect();

    let mut diagnostics = Vec::new();
    if scored.is_empty() {
        diagnostics.push(format!(
            "no token occurs more than {threshold:.2} times (percentile {}); lists are empty",
            opts.percentile
        ));
    }
    scored.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.token.cmp(&y.token)));
    let tokens_a: Vec<TokenScore> = scored.iter().filter(|t| t.score > 0.0).take(opts.k).cloned().collect();
    let tokens_b: Vec<TokenScore> = scored.iter().rev().filter(|t| t.score < 0.0).take(opts.k).cloned().collect();
    for (name, list) in [("a", &tokens_a), ("b", &tokens_b)] {
        if list.len() < opts.k && !scored.is_empty() {
            diagnostics.push(format!("class {name}: only {} qualifying tokens (k = {})", list.len(), opts.k));
        }
    }
    Ok(AttributionReport {
        topic: topic.to_string(),
        tokens_a,
        tokens_b,
        frequency_floor: opts.percentile,
        frequency_threshold: threshold,
        keyword_excluded: true,
        excluded: excluded.iter().cloned().collect(),
        aggregation: "mean over occurrences",
        diagnostics,
    })
}
