//! Newline-delimited tweet dumps to speaker turns.

use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::{DateTime, Datelike, NaiveDate};
use serde::Serialize;

use super::turns::SpeakerTurn;
use super::IngestError;
use crate::keywords::KeywordMatcher;
use crate::types::{SourceId, YearWindow};

pub const TWITTER_CNN: &str = "twitter@cnn";
pub const TWITTER_FOX: &str = "twitter@foxnews";

/// Reply/mention target handle to the audience source it maps to.
pub fn source_for_target(target: &str) -> Option<SourceId> {
    let t = target.trim().trim_start_matches('@').to_lowercase();
    match t.as_str() {
        "cnn" => SourceId::new(TWITTER_CNN).ok(),
        "foxnews" => SourceId::new(TWITTER_FOX).ok(),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeywordVolume {
    pub source: SourceId,
    pub keyword_id: u8,
    pub count: usize,
    pub mean_word_count: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TweetIngest {
    pub turns: Vec<SpeakerTurn>,
    /// Records missing a required field, or malformed.
    pub skipped: usize,
    pub unknown_target: usize,
    pub no_keyword: usize,
    pub out_of_window: usize,
    pub volumes: Vec<KeywordVolume>,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.date_naive());
    }
    NaiveDate::parse_from_str(s.get(..10)?, "%Y-%m-%d").ok()
}

/// Map each record `{text, created_at, target, id}` to a speaker turn.
pub fn ingest_tweets<R: BufRead>(
    reader: R,
    matcher: &KeywordMatcher,
    window: YearWindow,
) -> Result<TweetIngest, IngestError> {
    let mut out = TweetIngest::default();
    let mut tallies: BTreeMap<(SourceId, u8), (usize, usize)> = BTreeMap::new();

    for line in reader.lines() {
        let line = line.map_err(|e| IngestError::Io { path: "<tweets>".into(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let Ok(serde_json::Value::Object(rec)) = serde_json::from_str::<serde_json::Value>(&line) else {
            out.skipped += 1;
            continue;
        };
        let field = |k: &str| rec.get(k).and_then(|v| v.as_str());
        let (Some(text), Some(created), Some(target), Some(id)) =
            (field("text"), field("created_at"), field("target"), field("id"))
        else {
            out.skipped += 1;
            continue;
        };
        let Some(date) = parse_date(created) else {
            out.skipped += 1;
            continue;
        };
        let Some(source) = source_for_target(target) else {
            out.unknown_target += 1;
            continue;
        };
        if !window.contains_year(date.year()) {
            out.out_of_window += 1;
            continue;
        }
        let keywords = matcher.matched_ids(text);
        if keywords.is_empty() {
            out.no_keyword += 1;
            continue;
        }
        let turn = SpeakerTurn::new(format!("tw/{id}"), source.clone(), date, text, keywords);
        for k in &turn.keywords {
            let e = tallies.entry((source.clone(), *k)).or_default();
            e.0 += 1;
            e.1 += turn.word_count;
        }
        out.turns.push(turn);
    }

    out.volumes = tallies
        .into_iter()
        .map(|((source, keyword_id), (count, words))| KeywordVolume {
            source,
            keyword_id,
            count,
            mean_word_count: words as f64 / count as f64,
        })
        .collect();
    Ok(out)
}
