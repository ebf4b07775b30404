//! Stationarity and Granger-causality testing over SP series.

pub mod adf;
pub mod granger;
pub mod hypotheses;
pub mod ols;
pub mod special;

use thiserror::Error;

pub use adf::{adf_test, AdfResult, MaxLag, Stationarity};
pub use granger::{granger_test, GrangerResult};
pub use hypotheses::{difference, difference_values, run_hypotheses, run_hypotheses_values, HypothesisReport, HypothesisRow, SeriesCheck};
pub use ols::{ols, Design, OlsFit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("{what} too short: need {needed} points, found {found}")]
    TooShort { what: String, needed: usize, found: usize },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch { what: String, expected: usize, found: usize },
    #[error("rank-deficient design: column `{column}` is collinear with earlier columns")]
    RankDeficient { column: String },
    #[error("lag {lag} out of range (1..={max})")]
    LagRange { lag: usize, max: usize },
    #[error("series `{series}` is still non-stationary after one difference (ADF {statistic:.4} >= 5% critical {crit_5pct:.4})")]
    StillNonStationary { series: String, statistic: f64, crit_5pct: f64 },
}
