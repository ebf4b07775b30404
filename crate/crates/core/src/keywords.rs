//! Topical keyword sets, keyword matching and the shared tokenizer.

use std::collections::BTreeSet;
use std::ops::Range;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// One tracked keyword with the strings that count as an occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSpec {
    pub keyword_id: u8,
    pub name: String,
    pub surface_forms: Vec<String>,
    pub topic: String,
}

impl KeywordSpec {
    pub fn new(keyword_id: u8, name: &str, surface_forms: &[&str], topic: &str) -> Self {
        KeywordSpec {
            keyword_id,
            name: name.to_string(),
            surface_forms: surface_forms.iter().map(|s| s.to_string()).collect(),
            topic: topic.to_string(),
        }
    }

    /// Lowercase words making up any surface form.
    pub fn surface_tokens(&self) -> BTreeSet<String> {
        self.surface_forms
            .iter()
            .flat_map(|f| f.split_whitespace().map(|w| w.to_lowercase()))
            .collect()
    }
}

/// The nine keywords grouped into six topics.
pub fn default_keywords() -> Vec<KeywordSpec> {
    vec![
        KeywordSpec::new(1, "racism", &["racism"], "racism"),
        KeywordSpec::new(2, "racist", &["racist"], "racism"),
        KeywordSpec::new(
            3,
            "blacklivesmatter",
            &["blacklivesmatter", "black lives matter"],
            "black lives matter",
        ),
        KeywordSpec::new(4, "police", &["police"], "police"),
        KeywordSpec::new(5, "immigration", &["immigration"], "immigration"),
        KeywordSpec::new(6, "immigrant", &["immigrant", "immigrants"], "immigration"),
        KeywordSpec::new(7, "climate change", &["climate change"], "climate change"),
        KeywordSpec::new(8, "global warming", &["global warming"], "climate change"),
        KeywordSpec::new(9, "health care", &["health care"], "health care"),
    ]
}

/// Distinct topic labels in first-seen order.
pub fn topics(keywords: &[KeywordSpec]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for k in keywords {
        if !out.contains(&k.topic) {
            out.push(k.topic.clone());
        }
    }
    out
}

/// A keyword match inside a text, as a byte range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub keyword_id: u8,
    pub bytes: Range<usize>,
}

/// Case-insensitive, word-bounded matcher over a keyword set.
///
/// Multiword forms match across any run of whitespace.
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    patterns: Vec<(u8, Regex)>,
}

impl KeywordMatcher {
    pub fn new(keywords: &[KeywordSpec]) -> Self {
        let mut patterns = Vec::new();
        for k in keywords {
            for form in &k.surface_forms {
                let words: Vec<String> = form.split_whitespace().map(regex::escape).collect();
                if words.is_empty() {
                    continue;
                }
                let pat = format!(r"(?i)\b{}\b", words.join(r"\s+"));
                patterns.push((k.keyword_id, Regex::new(&pat).expect("escaped keyword pattern")));
            }
        }
        KeywordMatcher { patterns }
    }

    /// All occurrences sorted by position; overlapping forms of one keyword are reported once.
    pub fn occurrences(&self, text: &str) -> Vec<Occurrence> {
        let mut out: Vec<Occurrence> = Vec::new();
        for (id, re) in &self.patterns {
            for m in re.find_iter(text) {
                out.push(Occurrence { keyword_id: *id, bytes: m.range() });
            }
        }
        out.sort_by_key(|o| (o.bytes.start, o.keyword_id, o.bytes.end));
        out.dedup_by(|b, a| {
            a.keyword_id == b.keyword_id && b.bytes.start < a.bytes.end
        });
        out
    }

    pub fn matched_ids(&self, text: &str) -> BTreeSet<u8> {
        self.patterns
            .iter()
            .filter(|(_, re)| re.is_match(text))
            .map(|(id, _)| *id)
            .collect()
    }
}

/// A whitespace-delimited token with its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased with leading/trailing punctuation stripped; falls back to
    /// the lowercased raw token when nothing alphanumeric remains.
    pub norm: String,
    pub bytes: Range<usize>,
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(make_token(text, s..i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(make_token(text, s..text.len()));
    }
    out
}

fn make_token(text: &str, bytes: Range<usize>) -> Token {
    let raw = &text[bytes.clone()];
    let trimmed = raw.trim_matches(|c: char| !(c.is_alphanumeric() || c == '_'));
    let norm = if trimmed.is_empty() { raw } else { trimmed }.to_lowercase();
    Token { norm, bytes }
}

/// Indices of tokens overlapping a byte range.
pub fn token_span(tokens: &[Token], bytes: &Range<usize>) -> Range<usize> {
    let first = tokens.iter().position(|t| t.bytes.end > bytes.start);
    let last = tokens.iter().rposition(|t| t.bytes.start < bytes.end);
    match (first, last) {
        (Some(f), Some(l)) if f <= l => f..l + 1,
        _ => 0..0,
    }
}

/// Lowercase and collapse internal whitespace to single spaces.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for w in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(w.chars().flat_map(char::to_lowercase));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set_shape() {
        let ks = default_keywords();
        assert_eq!(ks.len(), 9);
        assert_eq!(topics(&ks).len(), 6);
        let ids: BTreeSet<u8> = ks.iter().map(|k| k.keyword_id).collect();
        assert_eq!(ids.len(), 9);
    }

    #[test]
    fn matching_is_case_insensitive_and_word_bounded() {
        let m = KeywordMatcher::new(&default_keywords());
        assert_eq!(m.matched_ids("The POLICE said"), BTreeSet::from([4]));
        assert!(m.matched_ids("policeman").is_empty());
        assert!(m.matched_ids("racists").is_empty());
        assert_eq!(m.matched_ids("#BlackLivesMatter"), BTreeSet::from([3]));
        assert_eq!(m.matched_ids("black   lives\tmatter rally"), BTreeSet::from([3]));
        assert_eq!(m.matched_ids("Climate\nChange"), BTreeSet::from([7]));
        assert!(m.matched_ids("climate-change").is_empty());
        assert_eq!(m.matched_ids("new immigrants arrive"), BTreeSet::from([6]));
    }

    #[test]
    fn occurrences_and_token_spans() {
        let m = KeywordMatcher::new(&default_keywords());
        let text = "Police and police on health care.";
        let occ = m.occurrences(text);
        assert_eq!(occ.len(), 3);
        let toks = tokenize(text);
        assert_eq!(toks[4].norm, "health");
        assert_eq!(toks[5].norm, "care");
        assert_eq!(token_span(&toks, &occ[2].bytes), 4..6);
        assert_eq!(token_span(&toks, &occ[0].bytes), 0..1);
    }

    #[test]
    fn normalize_collapses() {
        assert_eq!(normalize_text("  Call NOW\t 1-800 "), "call now 1-800");
    }
}
