//! Commercial removal: blocklist substring matching plus suppression of
//! lines repeated across a day's caption files.

use std::collections::HashMap;

use super::srt::SrtCue;
use crate::keywords::normalize_text;

/// Counts of normalized cue texts across one daily file set.
#[derive(Debug, Clone, Default)]
pub struct DuplicateTally {
    counts: HashMap<String, usize>,
}

impl DuplicateTally {
    pub fn from_files<'a, I>(files: I) -> Self
    where
        I: IntoIterator<Item = &'a [SrtCue]>,
    {
        let mut counts = HashMap::new();
        for cues in files {
            for c in cues {
                *counts.entry(normalize_text(&c.text)).or_insert(0) += 1;
            }
        }
        DuplicateTally { counts }
    }

    pub fn count(&self, normalized: &str) -> usize {
        self.counts.get(normalized).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CommercialFilter {
    /// Lowercase, whitespace-collapsed substrings.
    pub blocklist: Vec<String>,
    /// Remove texts repeated strictly more often than this; `None` disables.
    pub max_repeats: Option<usize>,
}

impl CommercialFilter {
    pub fn new(blocklist: &[String], max_repeats: Option<usize>) -> Self {
        CommercialFilter {
            blocklist: blocklist.iter().map(|b| normalize_text(b)).filter(|b| !b.is_empty()).collect(),
            max_repeats,
        }
    }

    pub fn is_commercial(&self, cue: &SrtCue, tally: &DuplicateTally) -> bool {
        let norm = normalize_text(&cue.text);
        if self.blocklist.iter().any(|b| norm.contains(b.as_str())) {
            return true;
        }
        matches!(self.max_repeats, Some(limit) if !norm.is_empty() && tally.count(&norm) > limit)
    }
}

/// Drop commercial cues, preserving order.
pub fn remove_commercials(cues: &[SrtCue], filter: &CommercialFilter, tally: &DuplicateTally) -> Vec<SrtCue> {
    cues.iter().filter(|c| !filter.is_commercial(c, tally)).cloned().collect()
}
