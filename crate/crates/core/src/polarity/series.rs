//! Yearly and monthly SP series for one keyword and one source pair.

use rayon::prelude::*;
use serde::Serialize;

use super::sp::{sp_fast, SpScore};
use super::PolarityError;
use crate::store::EmbeddingStore;
use crate::types::{Bucket, Granularity, SourcePair, YearWindow};

/// One computed SP value with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpValue {
    pub value: f64,
    pub n1: usize,
    pub n2: usize,
    pub bucket: Bucket,
    pub keyword_id: u8,
    pub pair: SourcePair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpPoint {
    pub bucket: Bucket,
    pub value: f64,
    /// Set counts; zero on a side means the bucket was empty there.
    pub n1: usize,
    pub n2: usize,
    /// Interpolated rather than measured.
    pub filled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpSeries {
    pub keyword_id: u8,
    pub pair: SourcePair,
    pub granularity: Granularity,
    pub points: Vec<SpPoint>,
}

impl SpSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Measured (non-filled) points as `SpValue`s.
    pub fn measured(&self) -> impl Iterator<Item = SpValue> + '_ {
        self.points.iter().filter(|p| !p.filled).map(|p| SpValue {
            value: p.value,
            n1: p.n1,
            n2: p.n2,
            bucket: p.bucket,
            keyword_id: self.keyword_id,
            pair: self.pair.clone(),
        })
    }

    /// Bucket of the largest / smallest value (first on ties).
    pub fn argmax(&self) -> Option<&SpPoint> {
        self.points.iter().fold(None, |best: Option<&SpPoint>, p| match best {
            Some(b) if b.value >= p.value => Some(b),
            _ => Some(p),
        })
    }

    pub fn argmin(&self) -> Option<&SpPoint> {
        self.points.iter().fold(None, |best: Option<&SpPoint>, p| match best {
            Some(b) if b.value <= p.value => Some(b),
            _ => Some(p),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SeriesDiagnostics {
    pub filled: Vec<String>,
}

/// Measured SP per bucket (`None` where either side is empty), then gap filling.
pub fn build_series(
    store: &EmbeddingStore,
    keyword_id: u8,
    pair: &SourcePair,
    granularity: Granularity,
    window: YearWindow,
) -> Result<(SpSeries, SeriesDiagnostics), PolarityError> {
    let buckets = window.buckets(granularity);
    let measured = buckets
        .par_iter()
        .map(|b| -> Result<(usize, usize, Option<SpScore>), PolarityError> {
            let c = store.query(&pair.a, keyword_id, *b)?;
            let f = store.query(&pair.b, keyword_id, *b)?;
            let n1 = c.as_ref().map_or(0, |s| s.len());
            let n2 = f.as_ref().map_or(0, |s| s.len());
            match (c, f) {
                (Some(c), Some(f)) => Ok((n1, n2, Some(sp_fast(&c.vectors(), &f.vectors())?))),
                _ => Ok((n1, n2, None)),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    if measured.iter().all(|(n1, _, _)| *n1 == 0) {
        return Err(PolarityError::NoData { keyword_id, side: pair.a.to_string() });
    }
    if measured.iter().all(|(_, n2, _)| *n2 == 0) {
        return Err(PolarityError::NoData { keyword_id, side: pair.b.to_string() });
    }
    let raw: Vec<Option<f64>> = measured.iter().map(|(_, _, s)| s.map(|s| s.value)).collect();
    let values = fill_gaps(&raw).ok_or(PolarityError::NoOverlap { keyword_id })?;

    let mut diag = SeriesDiagnostics::default();
    let points = buckets
        .iter()
        .zip(&measured)
        .zip(values)
        .map(|((bucket, (n1, n2, s)), value)| {
            let filled = s.is_none();
            if filled {
                diag.filled.push(bucket.to_string());
            }
            SpPoint { bucket: *bucket, value, n1: *n1, n2: *n2, filled }
        })
        .collect();
    Ok((SpSeries { keyword_id, pair: pair.clone(), granularity, points }, diag))
}

/// Linear interpolation between the nearest defined neighbors; leading and
/// trailing gaps take the nearest defined value. `None` if nothing is defined.
pub fn fill_gaps(raw: &[Option<f64>]) -> Option<Vec<f64>> {
    let defined: Vec<usize> = raw.iter().enumerate().filter(|(_, v)| v.is_some()).map(|(i, _)| i).collect();
    let (&first, &last) = (defined.first()?, defined.last()?);
    let mut out = Vec::with_capacity(raw.len());
    let mut k = 0; // index into `defined` of the last defined point <= i
    for (i, v) in raw.iter().enumerate() {
        if let Some(v) = v {
            if defined[k] < i {
                k += 1;
            }
            out.push(*v);
        } else if i < first {
            out.push(raw[first].unwrap());
        } else if i > last {
            out.push(raw[last].unwrap());
        } else {
            let (lo, hi) = (defined[k], defined[k + 1]);
            let (a, b) = (raw[lo].unwrap(), raw[hi].unwrap());
            let t = (i - lo) as f64 / (hi - lo) as f64;
            out.push(a + t * (b - a));
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation() {
        let out = fill_gaps(&[Some(0.2), None, Some(0.4)]).unwrap();
        assert!((out[1] - 0.3).abs() < 1e-15);
        let out = fill_gaps(&[None, Some(1.0), None, None, Some(4.0), None]).unwrap();
        assert_eq!(out, vec![1.0, 1.0, 2.0, 3.0, 4.0, 4.0]);
        assert!(fill_gaps(&[None, None]).is_none());
        assert_eq!(fill_gaps(&[Some(5.0)]).unwrap(), vec![5.0]);
    }
}
