//! Reconstruction of speaker turns from caption cues.

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::srt::SrtCue;
use crate::keywords::{normalize_text, KeywordMatcher};
use crate::types::{SourceId, YearMonth};

/// Caption convention marking a change of speaker.
pub const SPEAKER_MARKER: &str = ">>";
pub const DEFAULT_GAP_MS: u64 = 5_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerTurn {
    pub turn_id: String,
    pub source: SourceId,
    pub date: NaiveDate,
    pub text: String,
    pub keywords: BTreeSet<u8>,
    pub word_count: usize,
}

impl SpeakerTurn {
    pub fn new(turn_id: String, source: SourceId, date: NaiveDate, text: &str, keywords: BTreeSet<u8>) -> Self {
        let text = normalize_text(text);
        let word_count = text.split_whitespace().count();
        SpeakerTurn { turn_id, source, date, text, keywords, word_count }
    }

    pub fn year_month(&self) -> YearMonth {
        YearMonth { year: self.date.year(), month: self.date.month() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TurnOptions {
    /// A silence longer than this between cues starts a new turn.
    pub gap_ms: u64,
}

impl Default for TurnOptions {
    fn default() -> Self {
        TurnOptions { gap_ms: DEFAULT_GAP_MS }
    }
}

/// Merge cues into raw turn texts at `>>` markers and long gaps.
pub fn merge_turns(cues: &[SrtCue], opts: TurnOptions) -> Vec<String> {
    let mut turns: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut prev_end: Option<u64> = None;

    let flush = |current: &mut String, turns: &mut Vec<String>| {
        let t = current.trim();
        if !t.is_empty() {
            turns.push(t.to_string());
        }
        current.clear();
    };

    for cue in cues {
        if matches!(prev_end, Some(end) if cue.start.saturating_sub(end) > opts.gap_ms) {
            flush(&mut current, &mut turns);
        }
        prev_end = Some(cue.end);
        let mut segments = cue.text.split(SPEAKER_MARKER);
        if let Some(head) = segments.next() {
            push_words(&mut current, head);
        }
        for seg in segments {
            flush(&mut current, &mut turns);
            push_words(&mut current, seg);
        }
    }
    flush(&mut current, &mut turns);
    turns
}

fn push_words(buf: &mut String, text: &str) {
    for w in text.split_whitespace() {
        if !buf.is_empty() {
            buf.push(' ');
        }
        buf.push_str(w);
    }
}

/// Keyword-bearing speaker turns of one caption file.
///
/// `id_prefix` makes turn ids unique across files; the n-th merged turn of
/// the file gets id `{id_prefix}#{n}`.
pub fn extract_turns(
    cues: &[SrtCue],
    source: &SourceId,
    date: NaiveDate,
    matcher: &KeywordMatcher,
    id_prefix: &str,
    opts: TurnOptions,
) -> Vec<SpeakerTurn> {
    merge_turns(cues, opts)
        .into_iter()
        .enumerate()
        .filter_map(|(n, text)| {
            let keywords = matcher.matched_ids(&text);
            (!keywords.is_empty()).then(|| {
                SpeakerTurn::new(format!("{id_prefix}#{n}"), source.clone(), date, &text, keywords)
            })
        })
        .collect()
}
