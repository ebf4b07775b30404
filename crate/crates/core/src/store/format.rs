//! Binary embedding store.
//!
//! Layout (little-endian):
//!
//! ```text
//! header  "DLNS" | version u16 | dimension u32 | meta_len u32 | meta JSON
//! record  id_len u16 | id bytes | source u8 | keyword u8 | year u16 | month u8 | d x f32
//! index   n_keys u32 | n_keys x (source u8 | keyword u8 | year u16 | month u8 | n u32 | n x offset u64)
//! footer  record_count u64 | index_offset u64 | "DLNS"
//! ```
//!
//! Source ids are positions in the metadata `sources` list. Record offsets in
//! the index are absolute file offsets.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EmbeddingRecord, EmbeddingSet, StoreError};
use crate::types::{Bucket, SourceId, YearMonth};

pub const MAGIC: &[u8; 4] = b"DLNS";
pub const FORMAT_VERSION: u16 = 1;
const FOOTER_LEN: usize = 8 + 8 + 4;

/// JSON metadata blob stored in the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct StoreMetadata {
    pub sources: Vec<SourceId>,
    /// Provider name and settings (pooling, layer choice, window, ...).
    #[serde(default)]
    pub provider: serde_json::Value,
    #[serde(default)]
    pub diagnostics: serde_json::Value,
}

type IndexKey = (u8, u8, u16, u8);

/// Single-writer store builder. The file appears at `path` only on `finish`.
pub struct StoreWriter {
    path: PathBuf,
    tmp: PathBuf,
    out: BufWriter<File>,
    dim: usize,
    sources: Vec<SourceId>,
    offset: u64,
    count: u64,
    index: BTreeMap<IndexKey, Vec<u64>>,
}

impl StoreWriter {
    pub fn create(path: &Path, dim: usize, meta: &StoreMetadata) -> Result<Self, StoreError> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(StoreError::Format(format!("invalid dimension {dim}")));
        }
        if meta.sources.len() > 256 {
            return Err(StoreError::Format("more than 256 sources".into()));
        }
        let tmp = path.with_extension("partial");
        let file = File::create(&tmp).map_err(|e| StoreError::io(&tmp, e))?;
        let mut w = StoreWriter {
            path: path.to_path_buf(),
            tmp,
            out: BufWriter::new(file),
            dim,
            sources: meta.sources.clone(),
            offset: 0,
            count: 0,
            index: BTreeMap::new(),
        };
        let blob = serde_json::to_vec(meta).map_err(|e| StoreError::Format(e.to_string()))?;
        let mut head = Vec::with_capacity(14 + blob.len());
        head.extend_from_slice(MAGIC);
        head.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        head.extend_from_slice(&(dim as u32).to_le_bytes());
        head.extend_from_slice(&(blob.len() as u32).to_le_bytes());
        head.extend_from_slice(&blob);
        w.write(&head)?;
        Ok(w)
    }

    fn write(&mut self, bytes: &[u8]) -> Result<(), StoreError> {
        self.out.write_all(bytes).map_err(|e| StoreError::io(&self.tmp, e))?;
        self.offset += bytes.len() as u64;
        Ok(())
    }

    pub fn push(&mut self, rec: &EmbeddingRecord) -> Result<(), StoreError> {
        if rec.vector.len() != self.dim {
            return Err(StoreError::DimensionMismatch {
                turn_id: rec.turn_id.clone(),
                expected: self.dim,
                found: rec.vector.len(),
            });
        }
        rec.check_vector()?;
        let source = self
            .sources
            .iter()
            .position(|s| *s == rec.source)
            .ok_or_else(|| StoreError::UnknownSource(rec.source.to_string()))? as u8;
        let id = rec.turn_id.as_bytes();
        if id.len() > u16::MAX as usize {
            return Err(StoreError::Format(format!("turn id too long: {}", rec.turn_id)));
        }
        let year = u16::try_from(rec.date.year)
            .map_err(|_| StoreError::Format(format!("year {} out of range", rec.date.year)))?;
        let mut buf = Vec::with_capacity(9 + id.len() + 4 * self.dim);
        buf.extend_from_slice(&(id.len() as u16).to_le_bytes());
        buf.extend_from_slice(id);
        buf.push(source);
        buf.push(rec.keyword_id);
        buf.extend_from_slice(&year.to_le_bytes());
        buf.push(rec.date.month as u8);
        for v in &rec.vector {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let at = self.offset;
        self.write(&buf)?;
        self.index
            .entry((source, rec.keyword_id, year, rec.date.month as u8))
            .or_default()
            .push(at);
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<StoreSummary, StoreError> {
        let index_offset = self.offset;
        let mut buf = Vec::new();
        buf.extend_from_slice(&(self.index.len() as u32).to_le_bytes());
        for ((s, k, y, m), offsets) in &self.index {
            buf.push(*s);
            buf.push(*k);
            buf.extend_from_slice(&y.to_le_bytes());
            buf.push(*m);
            buf.extend_from_slice(&(offsets.len() as u32).to_le_bytes());
            for o in offsets {
                buf.extend_from_slice(&o.to_le_bytes());
            }
        }
        buf.extend_from_slice(&self.count.to_le_bytes());
        buf.extend_from_slice(&index_offset.to_le_bytes());
        buf.extend_from_slice(MAGIC);
        self.write(&buf)?;
        self.out.flush().map_err(|e| StoreError::io(&self.tmp, e))?;
        std::fs::rename(&self.tmp, &self.path).map_err(|e| StoreError::io(&self.path, e))?;
        Ok(StoreSummary { dimension: self.dim, records: self.count, keys: self.index.len() })
    }

    /// Drop the partial file.
    pub fn abort(self) {
        let tmp = self.tmp.clone();
        drop(self);
        let _ = std::fs::remove_file(tmp);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StoreSummary {
    pub dimension: usize,
    pub records: u64,
    pub keys: usize,
}

/// Write all records; on any error no store file is left behind.
pub fn write_store<'a, I>(path: &Path, dim: usize, meta: &StoreMetadata, records: I) -> Result<StoreSummary, StoreError>
where
    I: IntoIterator<Item = &'a EmbeddingRecord>,
{
    let mut w = StoreWriter::create(path, dim, meta)?;
    for r in records {
        if let Err(e) = w.push(r) {
            w.abort();
            return Err(e);
        }
    }
    w.finish()
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len()).ok_or_else(|| {
            StoreError::Format(format!("truncated at byte {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, StoreError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Immutable, fully loaded store.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    bytes: Vec<u8>,
    dim: usize,
    meta: StoreMetadata,
    records_start: usize,
    index_offset: usize,
    count: u64,
    index: BTreeMap<IndexKey, Vec<u64>>,
}

impl EmbeddingStore {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let bytes = std::fs::read(path).map_err(|e| StoreError::io(path, e))?;
        Self::from_bytes(bytes)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, StoreError> {
        let mut c = Cursor { buf: &bytes, pos: 0 };
        if c.take(4)? != MAGIC {
            return Err(StoreError::Format("bad magic".into()));
        }
        let version = c.u16()?;
        if version != FORMAT_VERSION {
            return Err(StoreError::Format(format!("unsupported version {version}")));
        }
        let dim = c.u32()? as usize;
        let meta_len = c.u32()? as usize;
        let meta: StoreMetadata =
            serde_json::from_slice(c.take(meta_len)?).map_err(|e| StoreError::Format(format!("metadata: {e}")))?;
        let records_start = c.pos;

        if bytes.len() < records_start + FOOTER_LEN {
            return Err(StoreError::Format("missing footer".into()));
        }
        let mut f = Cursor { buf: &bytes, pos: bytes.len() - FOOTER_LEN };
        let count = f.u64()?;
        let index_offset = f.u64()? as usize;
        if f.take(4)? != MAGIC {
            return Err(StoreError::Format("bad footer magic".into()));
        }
        if index_offset < records_start || index_offset > bytes.len() - FOOTER_LEN {
            return Err(StoreError::Format("index offset out of range".into()));
        }
        let mut ic = Cursor { buf: &bytes[..bytes.len() - FOOTER_LEN], pos: index_offset };
        let mut index = BTreeMap::new();
        for _ in 0..ic.u32()? {
            let key = (ic.u8()?, ic.u8()?, ic.u16()?, ic.u8()?);
            let n = ic.u32()? as usize;
            let offsets = (0..n).map(|_| ic.u64()).collect::<Result<Vec<_>, _>>()?;
            index.insert(key, offsets);
        }
        Ok(EmbeddingStore { dim, meta, records_start, index_offset, count, index, bytes })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn metadata(&self) -> &StoreMetadata {
        &self.meta
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    fn decode_at(&self, offset: usize) -> Result<(EmbeddingRecord, usize), StoreError> {
        let mut c = Cursor { buf: &self.bytes[..self.index_offset], pos: offset };
        let id_len = c.u16()? as usize;
        let turn_id = String::from_utf8(c.take(id_len)?.to_vec())
            .map_err(|_| StoreError::Format(format!("turn id at {offset} is not UTF-8")))?;
        let s = c.u8()? as usize;
        let source = self
            .meta
            .sources
            .get(s)
            .cloned()
            .ok_or_else(|| StoreError::Format(format!("source index {s} not in metadata")))?;
        let keyword_id = c.u8()?;
        let year = c.u16()? as i32;
        let month = c.u8()? as u32;
        let date = YearMonth::new(year, month).map_err(|e| StoreError::Format(e.to_string()))?;
        let raw = c.take(4 * self.dim)?;
        let vector = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        Ok((EmbeddingRecord { turn_id, source, keyword_id, date, vector }, c.pos))
    }

    /// All records in file order.
    pub fn records(&self) -> impl Iterator<Item = Result<EmbeddingRecord, StoreError>> + '_ {
        let mut pos = self.records_start;
        std::iter::from_fn(move || {
            if pos >= self.index_offset {
                return None;
            }
            match self.decode_at(pos) {
                Ok((r, next)) => {
                    pos = next;
                    Some(Ok(r))
                }
                Err(e) => {
                    pos = self.index_offset;
                    Some(Err(e))
                }
            }
        })
    }

    /// Records of one source and keyword inside a bucket, in file order.
    /// `Ok(None)` signals that nothing matches.
    pub fn query(&self, source: &SourceId, keyword_id: u8, bucket: Bucket) -> Result<Option<EmbeddingSet>, StoreError> {
        let Some(s) = self.meta.sources.iter().position(|x| x == source) else {
            return Ok(None);
        };
        let s = s as u8;
        let Ok(year) = u16::try_from(bucket.year()) else {
            return Ok(None);
        };
        let (lo, hi) = match bucket {
            Bucket::Year(_) => ((s, keyword_id, year, 0), (s, keyword_id, year, u8::MAX)),
            Bucket::Month(ym) => {
                let m = ym.month as u8;
                ((s, keyword_id, year, m), (s, keyword_id, year, m))
            }
        };
        let mut offsets: Vec<u64> = self.index.range(lo..=hi).flat_map(|(_, v)| v.iter().copied()).collect();
        if offsets.is_empty() {
            return Ok(None);
        }
        offsets.sort_unstable();
        let entries = offsets
            .into_iter()
            .map(|o| self.decode_at(o as usize).map(|(r, _)| r))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(EmbeddingSet { source: source.clone(), keyword_id, bucket, entries }))
    }

    /// Full consistency check: every record decodes with finite nonzero
    /// vectors, the count matches the footer and the index covers every record.
    pub fn validate(&self) -> Result<StoreSummary, StoreError> {
        let mut seen = 0u64;
        let mut offsets = Vec::new();
        let mut pos = self.records_start;
        while pos < self.index_offset {
            let (rec, next) = self.decode_at(pos)?;
            rec.check_vector()?;
            offsets.push(pos as u64);
            seen += 1;
            pos = next;
        }
        if seen != self.count {
            return Err(StoreError::Format(format!("footer count {} but {} records", self.count, seen)));
        }
        let mut indexed: Vec<u64> = self.index.values().flatten().copied().collect();
        indexed.sort_unstable();
        if indexed != offsets {
            return Err(StoreError::Format("index does not match records".into()));
        }
        Ok(StoreSummary { dimension: self.dim, records: self.count, keys: self.index.len() })
    }
}

/// Concatenate stores of equal dimension (e.g. shards written in parallel).
pub fn merge_stores(inputs: &[PathBuf], output: &Path) -> Result<StoreSummary, StoreError> {
    let stores = inputs.iter().map(|p| EmbeddingStore::open(p)).collect::<Result<Vec<_>, _>>()?;
    let Some(first) = stores.first() else {
        return Err(StoreError::Format("nothing to merge".into()));
    };
    let dim = first.dimension();
    let mut meta = first.metadata().clone();
    for s in &stores[1..] {
        if s.dimension() != dim {
            return Err(StoreError::Format(format!("cannot merge d={} with d={dim}", s.dimension())));
        }
        for src in &s.metadata().sources {
            if !meta.sources.contains(src) {
                meta.sources.push(src.clone());
            }
        }
    }
    let mut w = StoreWriter::create(output, dim, &meta)?;
    for s in &stores {
        for r in s.records() {
            let r = r?;
            if let Err(e) = w.push(&r) {
                w.abort();
                return Err(e);
            }
        }
    }
    w.finish()
}
