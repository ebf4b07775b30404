//! Source classification over keyword-bearing turns and Integrated Gradients
//! token attribution, including the lag-shifted month windows.

pub mod ig;
pub mod lagsplit;
pub mod model;
pub mod tokens;

use thiserror::Error;

use crate::ingest::SpeakerTurn;
use crate::keywords::tokenize;
use crate::store::ToyEmbedder;

pub use ig::{integrated_gradients, Differentiable, LinearModel};
pub use lagsplit::{lag_split, lag_split_with_cap, LagDirection, LagSplit, Side, MAX_SPLIT_LAG};
pub use model::{train_classifier, ClassifierMetrics, ReferenceClassifier, TrainOptions, Trained};
pub use tokens::{percentile, token_attributions, AttributionOptions, AttributionReport, TokenScore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttributionError {
    #[error("class `{class}` has {found} turns; at least {needed} are required")]
    TooFewTurns { class: String, found: usize, needed: usize },
    #[error("class imbalance {a}:{b} exceeds 9:1; resample the larger class before training")]
    Imbalance { a: usize, b: usize },
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("integration steps must be at least 1")]
    NoSteps,
    #[error("lag {lag} outside 1..={max}")]
    LagRange { lag: u32, max: u32 },
    #[error("unknown topic `{topic}`; valid topics: {valid}")]
    UnknownTopic { topic: String, valid: String },
    #[error("invalid option: {0}")]
    Options(String),
}

/// A turn's tokens with one vector per token.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnTokens {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl TurnTokens {
    /// Mean token vector, the classifier's input.
    pub fn mean(&self) -> Vec<f64> {
        mean_rows(&self.vectors)
    }
}

pub(crate) fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    let mut m = vec![0.0; d];
    for r in rows {
        m.iter_mut().zip(r).for_each(|(a, x)| *a += x);
    }
    let n = rows.len().max(1) as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// Per-token vectors for a turn from the toy embedder (window 0 gives the
/// bare token vector). Turns without tokens yield `None`.
pub fn turn_tokens(turn: &SpeakerTurn, embedder: &mut ToyEmbedder) -> Option<TurnTokens> {
    let tokens: Vec<String> = tokenize(&turn.text).into_iter().map(|t| t.norm).filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return None;
    }
    let vectors = tokens.iter().map(|t| embedder.token(t).to_vec()).collect();
    Some(TurnTokens { tokens, vectors })
}
