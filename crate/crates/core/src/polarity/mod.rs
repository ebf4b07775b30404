//! Semantic polarization values and time series.

pub mod series;
pub mod sp;

use thiserror::Error;

pub use series::{build_series, fill_gaps, SeriesDiagnostics, SpPoint, SpSeries, SpValue};
pub use sp::{sp_bruteforce, sp_fast, sp_fast_iter, sp_from_sums, SpScore, UnitSum};

use crate::store::StoreError;

#[derive(Debug, Error, PartialEq)]
pub enum PolarityError {
    #[error("SP is undefined for an empty embedding set")]
    EmptySet,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("non-finite vector entry")]
    NonFinite,
    #[error("keyword {keyword_id} has no embeddings for source `{side}` in the window")]
    NoData { keyword_id: u8, side: String },
    #[error("keyword {keyword_id}: the two sources never share a bucket")]
    NoOverlap { keyword_id: u8 },
    #[error("store: {0}")]
    Store(String),
}

impl From<StoreError> for PolarityError {
    fn from(e: StoreError) -> Self {
        PolarityError::Store(e.to_string())
    }
}
