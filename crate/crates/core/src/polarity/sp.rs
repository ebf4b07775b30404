//! Semantic polarization between two embedding sets: the mean cosine
//! distance over all cross pairs.
//!
//! `sp_bruteforce` walks all `n1 * n2` pairs. `sp_fast` uses
//! `mean_ij cos(c_i, f_j) = (sum_i c_i/|c_i|) . (sum_j f_j/|f_j|) / (n1 n2)`
//! and touches each vector once.

use super::PolarityError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpScore {
    /// In `[0, 2]`.
    pub value: f64,
    pub n1: usize,
    pub n2: usize,
}

fn norm_of<E: Copy + Into<f64>>(v: &[E]) -> Result<f64, PolarityError> {
    let mut s = 0.0;
    for x in v {
        let x: f64 = (*x).into();
        if !x.is_finite() {
            return Err(PolarityError::NonFinite);
        }
        s += x * x;
    }
    if s == 0.0 {
        return Err(PolarityError::ZeroVector);
    }
    Ok(s.sqrt())
}

fn check_dims<V: AsRef<[E]>, E>(sets: [&[V]; 2]) -> Result<usize, PolarityError> {
    let d = sets[0][0].as_ref().len();
    for v in sets.iter().flat_map(|s| s.iter()) {
        if v.as_ref().len() != d {
            return Err(PolarityError::DimensionMismatch { expected: d, found: v.as_ref().len() });
        }
    }
    Ok(d)
}

/// Reference double loop over every cross pair.
pub fn sp_bruteforce<V, E>(c: &[V], f: &[V]) -> Result<SpScore, PolarityError>
where
    V: AsRef<[E]>,
    E: Copy + Into<f64>,
{
    if c.is_empty() || f.is_empty() {
        return Err(PolarityError::EmptySet);
    }
    check_dims([c, f])?;
    let cn = c.iter().map(|v| norm_of(v.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let fn_ = f.iter().map(|v| norm_of(v.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    for (ci, ni) in c.iter().zip(&cn) {
        for (fj, nj) in f.iter().zip(&fn_) {
            let dot: f64 = ci.as_ref().iter().zip(fj.as_ref()).map(|(a, b)| (*a).into() * (*b).into()).sum();
            total += 1.0 - dot / (ni * nj);
        }
    }
    let n = (c.len() * f.len()) as f64;
    Ok(SpScore { value: (total / n).clamp(0.0, 2.0), n1: c.len(), n2: f.len() })
}

/// Streaming pairwise (cascade) sum of unit-normalized vectors.
///
/// Vectors are summed naively in blocks of `BLOCK`; block sums are merged
/// with a binary counter so rounding error grows with `log n`, using
/// `O(d log n)` memory.
#[derive(Debug, Clone)]
pub struct UnitSum {
    dim: Option<usize>,
    block: Vec<f64>,
    in_block: usize,
    levels: Vec<Option<Vec<f64>>>,
    count: usize,
}

const BLOCK: usize = 32;

impl Default for UnitSum {
    fn default() -> Self {
        UnitSum { dim: None, block: Vec::new(), in_block: 0, levels: Vec::new(), count: 0 }
    }
}

impl UnitSum {
    pub fn push<E: Copy + Into<f64>>(&mut self, v: &[E]) -> Result<(), PolarityError> {
        match self.dim {
            None => {
                self.dim = Some(v.len());
                self.block = vec![0.0; v.len()];
            }
            Some(d) if d != v.len() => {
                return Err(PolarityError::DimensionMismatch { expected: d, found: v.len() })
            }
            _ => {}
        }
        let inv = 1.0 / norm_of(v)?;
        for (a, x) in self.block.iter_mut().zip(v) {
            *a += (*x).into() * inv;
        }
        self.in_block += 1;
        self.count += 1;
        if self.in_block == BLOCK {
            self.carry();
        }
        Ok(())
    }

    fn carry(&mut self) {
        let d = self.block.len();
        let mut carry = std::mem::replace(&mut self.block, vec![0.0; d]);
        self.in_block = 0;
        for level in self.levels.iter_mut() {
            match level.take() {
                Some(prev) => carry.iter_mut().zip(prev).for_each(|(a, b)| *a += b),
                None => {
                    *level = Some(carry);
                    return;
                }
            }
        }
        self.levels.push(Some(carry));
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// The accumulated sum (partial block first, then lowest level upward).
    pub fn total(&self) -> Vec<f64> {
        let mut acc = self.block.clone();
        for l in self.levels.iter().flatten() {
            acc.iter_mut().zip(l).for_each(|(a, b)| *a += b);
        }
        acc
    }
}

/// SP from two accumulated unit sums.
pub fn sp_from_sums(c: &UnitSum, f: &UnitSum) -> Result<SpScore, PolarityError> {
    if c.count() == 0 || f.count() == 0 {
        return Err(PolarityError::EmptySet);
    }
    if c.dim() != f.dim() {
        return Err(PolarityError::DimensionMismatch {
            expected: c.dim().unwrap_or(0),
            found: f.dim().unwrap_or(0),
        });
    }
    let (sc, sf) = (c.total(), f.total());
    let dot: f64 = sc.iter().zip(&sf).map(|(a, b)| a * b).sum();
    let mean_cos = dot / (c.count() as f64 * f.count() as f64);
    Ok(SpScore { value: (1.0 - mean_cos).clamp(0.0, 2.0), n1: c.count(), n2: f.count() })
}

/// Linear-time SP over two vector streams.
pub fn sp_fast_iter<I, J, V, W, E>(c: I, f: J) -> Result<SpScore, PolarityError>
where
    I: IntoIterator<Item = V>,
    J: IntoIterator<Item = W>,
    V: AsRef<[E]>,
    W: AsRef<[E]>,
    E: Copy + Into<f64>,
{
    let mut sc = UnitSum::default();
    for v in c {
        sc.push(v.as_ref())?;
    }
    let mut sf = UnitSum::default();
    for v in f {
        sf.push(v.as_ref())?;
    }
    sp_from_sums(&sc, &sf)
}

/// Linear-time SP; agrees with [`sp_bruteforce`] to ~1e-12.
pub fn sp_fast<V, E>(c: &[V], f: &[V]) -> Result<SpScore, PolarityError>
where
    V: AsRef<[E]>,
    E: Copy + Into<f64>,
{
    sp_fast_iter(c.iter().map(|v| v.as_ref()), f.iter().map(|v| v.as_ref()))
}
