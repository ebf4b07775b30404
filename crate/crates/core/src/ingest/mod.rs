//! Caption and tweet ingestion into keyword-bearing speaker turns.

pub mod commercials;
pub mod corpus;
pub mod srt;
pub mod turns;
pub mod turnstore;
pub mod tweets;

use thiserror::Error;

pub use commercials::{remove_commercials, CommercialFilter, DuplicateTally};
pub use corpus::{ingest_caption_dir, CaptionDiagnostics, CaptionIngestOptions};
pub use srt::{parse_srt, write_srt, SrtCue, SrtOptions, SrtParse};
pub use turns::{extract_turns, merge_turns, SpeakerTurn, TurnOptions};
pub use turnstore::{read_turns, write_turns};
pub use tweets::{ingest_tweets, KeywordVolume, TweetIngest};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8: {0}")]
    Utf8(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("input path does not exist: {0}")]
    MissingPath(String),
    #[error("malformed record: {0}")]
    Json(String),
}
