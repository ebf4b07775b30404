//! Semantic polarization between media sources.
//!
//! The pipeline ingests closed captions and tweet dumps into keyword-bearing
//! speaker turns, stores one contextual vector per keyword occurrence,
//! measures how far two sources drift apart in their use of the same keyword
//! (mean pairwise cosine distance per time bucket), tests whether one
//! source's drift forecasts another's (ADF + Granger), and attributes the
//! difference to context tokens with integrated gradients.

pub mod attribution;
pub mod config;
pub mod ingest;
pub mod keywords;
pub mod pipeline;
pub mod polarity;
pub mod report;
pub mod stats;
pub mod store;
pub mod synth;
pub mod types;

pub use types::{Bucket, Granularity, SourceId, SourcePair, YearMonth, YearWindow};
