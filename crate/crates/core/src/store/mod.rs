//! Per-occurrence contextual embeddings: record types, the binary store and
//! embedding providers.

pub mod format;
pub mod toy;

use std::ops::Range;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub use format::{merge_stores, write_store, EmbeddingStore, StoreMetadata, StoreSummary, StoreWriter};
pub use toy::{toy_embed, token_vector, ToyEmbedder};

use crate::ingest::SpeakerTurn;
use crate::keywords::{token_span, tokenize, KeywordMatcher, Token};
use crate::types::{Bucket, SourceId, YearMonth};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("record {turn_id}: dimension {found}, store expects {expected}")]
    DimensionMismatch { turn_id: String, expected: usize, found: usize },
    #[error("record {turn_id}: vector must be finite and nonzero")]
    BadVector { turn_id: String },
    #[error("source `{0}` is not declared in the store metadata")]
    UnknownSource(String),
    #[error("malformed store: {0}")]
    Format(String),
    #[error("embedding failed: {0}")]
    Embed(String),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io { path: path.display().to_string(), source }
    }
}

/// One contextual vector for one keyword occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub turn_id: String,
    pub source: SourceId,
    pub keyword_id: u8,
    pub date: YearMonth,
    pub vector: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn check_vector(&self) -> Result<(), StoreError> {
        let finite = self.vector.iter().all(|x| x.is_finite());
        if !finite || self.vector.iter().all(|x| *x == 0.0) {
            return Err(StoreError::BadVector { turn_id: self.turn_id.clone() });
        }
        Ok(())
    }
}

/// Records sharing source, keyword and time bucket. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub source: SourceId,
    pub keyword_id: u8,
    pub bucket: Bucket,
    pub entries: Vec<EmbeddingRecord>,
}

impl EmbeddingSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vectors(&self) -> Vec<&[f32]> {
        self.entries.iter().map(|r| r.vector.as_slice()).collect()
    }
}

/// Produces one vector for a keyword occurrence given the turn's tokens and
/// the token span of the occurrence. Must be deterministic for a fixed
/// configuration.
pub trait EmbeddingProvider {
    fn dimension(&self) -> usize;
    fn embed(&mut self, tokens: &[Token], span: Range<usize>) -> Result<Vec<f64>, StoreError>;
    /// Provider identity and settings, stamped into store metadata.
    fn describe(&self) -> serde_json::Value;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EmbedDiagnostics {
    pub turns: usize,
    pub occurrences: usize,
    /// Occurrences beyond the first of the same keyword within one turn.
    pub repeated_in_turn: usize,
    pub skipped: usize,
}

/// One record per keyword occurrence in every turn.
pub fn embed_turns<P: EmbeddingProvider>(
    turns: &[SpeakerTurn],
    matcher: &KeywordMatcher,
    provider: &mut P,
) -> Result<(Vec<EmbeddingRecord>, EmbedDiagnostics), StoreError> {
    let mut diag = EmbedDiagnostics { turns: turns.len(), ..Default::default() };
    let mut out = Vec::new();
    for turn in turns {
        let tokens = tokenize(&turn.text);
        let mut seen = std::collections::BTreeSet::new();
        for occ in matcher.occurrences(&turn.text) {
            let span = token_span(&tokens, &occ.bytes);
            if span.is_empty() {
                diag.skipped += 1;
                continue;
            }
            diag.occurrences += 1;
            if !seen.insert(occ.keyword_id) {
                diag.repeated_in_turn += 1;
            }
            let v = provider.embed(&tokens, span)?;
            out.push(EmbeddingRecord {
                turn_id: turn.turn_id.clone(),
                source: turn.source.clone(),
                keyword_id: occ.keyword_id,
                date: turn.year_month(),
                vector: v.into_iter().map(|x| x as f32).collect(),
            });
        }
    }
    Ok((out, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keywords::default_keywords;
    use chrono::NaiveDate;

    fn rec(id: &str, src: &str, kw: u8, y: i32, m: u32, v: Vec<f32>) -> EmbeddingRecord {
        EmbeddingRecord {
            turn_id: id.into(),
            source: SourceId::new(src).unwrap(),
            keyword_id: kw,
            date: YearMonth::new(y, m).unwrap(),
            vector: v,
        }
    }

    fn meta() -> StoreMetadata {
        StoreMetadata {
            sources: vec![SourceId::new("cnn").unwrap(), SourceId::new("foxnews").unwrap()],
            ..Default::default()
        }
    }

    #[test]
    fn empty_store() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.dlns");
        let s = write_store(&p, 4, &meta(), []).unwrap();
        assert_eq!(s.records, 0);
        let st = EmbeddingStore::open(&p).unwrap();
        assert_eq!(st.len(), 0);
        assert_eq!(st.dimension(), 4);
        st.validate().unwrap();
    }

    #[test]
    fn roundtrip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.dlns");
        let recs = vec![
            rec("a", "cnn", 1, 2010, 3, vec![1.0, -0.0, f32::MIN_POSITIVE, 3.5]),
            rec("b", "foxnews", 1, 2010, 3, vec![0.1, 0.2, 0.3, 0.4]),
            rec("c", "cnn", 2, 2011, 12, vec![f32::MAX, 1e-30, -2.0, 0.0]),
        ];
        write_store(&p, 4, &meta(), &recs).unwrap();
        let st = EmbeddingStore::open(&p).unwrap();
        let back: Vec<_> = st.records().collect::<Result<_, _>>().unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.turn_id, b.turn_id);
            let bits = |r: &EmbeddingRecord| r.vector.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        assert_eq!(st.validate().unwrap().records, 3);
    }

    #[test]
    fn dimension_mismatch_names_record() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.dlns");
        let recs = vec![
            rec("ok", "cnn", 1, 2010, 1, vec![1.0; 4]),
            rec("bad-one", "cnn", 1, 2010, 1, vec![1.0; 8]),
            rec("bad-two", "cnn", 1, 2010, 1, vec![1.0; 8]),
        ];
        let err = write_store(&p, 4, &meta(), &recs).unwrap_err();
        assert!(matches!(&err, StoreError::DimensionMismatch { turn_id, .. } if turn_id == "bad-one"));
        assert!(!p.exists());
        assert!(!p.with_extension("partial").exists());
    }

    #[test]
    fn zero_and_nonfinite_vectors_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.dlns");
        let z = [rec("z", "cnn", 1, 2010, 1, vec![0.0; 4])];
        assert!(matches!(write_store(&p, 4, &meta(), &z), Err(StoreError::BadVector { .. })));
        let n = [rec("n", "cnn", 1, 2010, 1, vec![f32::NAN, 1.0, 0.0, 0.0])];
        assert!(matches!(write_store(&p, 4, &meta(), &n), Err(StoreError::BadVector { .. })));
    }

    #[test]
    fn query_year_and_month() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.dlns");
        let recs = vec![
            rec("a", "cnn", 1, 2010, 3, vec![1.0, 0.0]),
            rec("b", "cnn", 1, 2010, 3, vec![0.0, 1.0]),
            rec("c", "cnn", 1, 2010, 7, vec![1.0, 1.0]),
            rec("d", "foxnews", 1, 2010, 3, vec![1.0, 1.0]),
        ];
        write_store(&p, 2, &meta(), &recs).unwrap();
        let st = EmbeddingStore::open(&p).unwrap();
        let cnn = SourceId::new("cnn").unwrap();
        let ym = YearMonth::new(2010, 3).unwrap();
        assert_eq!(st.query(&cnn, 1, Bucket::Month(ym)).unwrap().unwrap().len(), 2);
        let year = st.query(&cnn, 1, Bucket::Year(2010)).unwrap().unwrap();
        assert_eq!(year.entries.iter().map(|r| r.turn_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert!(st.query(&cnn, 9, Bucket::Year(2010)).unwrap().is_none());
        assert!(st.query(&SourceId::new("msnbc").unwrap(), 1, Bucket::Year(2010)).unwrap().is_none());
    }

    #[test]
    fn corrupted_store_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.dlns");
        write_store(&p, 2, &meta(), &[rec("a", "cnn", 1, 2010, 3, vec![1.0, 0.0])]).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        let n = bytes.len();
        assert!(EmbeddingStore::from_bytes(bytes[..n - 3].to_vec()).is_err());
        bytes[0] = b'X';
        assert!(EmbeddingStore::from_bytes(bytes).is_err());
    }

    #[test]
    fn merge_shards() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.dlns");
        let b = dir.path().join("b.dlns");
        let out = dir.path().join("m.dlns");
        write_store(&a, 2, &meta(), &[rec("a", "cnn", 1, 2010, 3, vec![1.0, 0.0])]).unwrap();
        let meta_b = StoreMetadata { sources: vec![SourceId::new("twitter@cnn").unwrap()], ..Default::default() };
        write_store(&b, 2, &meta_b, &[rec("b", "twitter@cnn", 1, 2010, 3, vec![0.0, 1.0])]).unwrap();
        let s = merge_stores(&[a, b], &out).unwrap();
        assert_eq!(s.records, 2);
        let st = EmbeddingStore::open(&out).unwrap();
        assert_eq!(st.metadata().sources.len(), 3);
        st.validate().unwrap();
    }

    #[test]
    fn embed_turns_one_record_per_occurrence() {
        let kws = default_keywords();
        let m = KeywordMatcher::new(&kws);
        let turn = SpeakerTurn::new(
            "t1".into(),
            SourceId::new("cnn").unwrap(),
            NaiveDate::from_ymd_opt(2012, 5, 1).unwrap(),
            "police said the police and health care",
            [4, 9].into(),
        );
        let mut toy = ToyEmbedder::new(8, 2).unwrap();
        let (recs, diag) = embed_turns(&[turn], &m, &mut toy).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(diag.occurrences, 3);
        assert_eq!(diag.repeated_in_turn, 1);
        assert_eq!(recs[2].keyword_id, 9);
        assert_eq!(recs[0].date, YearMonth::new(2012, 5).unwrap());
    }
}
