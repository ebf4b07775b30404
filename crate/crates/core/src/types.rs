//! Shared identifiers and calendar buckets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("source id must be nonempty")]
    EmptySource,
    #[error("source id `{0}` must be lowercase")]
    NotLowercase(String),
    #[error("invalid month {0} (expected 1..=12)")]
    Month(u32),
    #[error("cannot parse bucket `{0}` (expected YYYY or YYYY-MM)")]
    Bucket(String),
    #[error("empty year window {start}..={end}")]
    Window { start: i32, end: i32 },
}

/// Label of one media entity, e.g. `cnn` or `twitter@foxnews`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceId(String);

impl SourceId {
    pub fn new(name: impl Into<String>) -> Result<Self, TypeError> {
        let name = name.into();
        if name.is_empty() {
            return Err(TypeError::EmptySource);
        }
        if name.chars().any(|c| c.is_uppercase()) {
            return Err(TypeError::NotLowercase(name));
        }
        Ok(SourceId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for SourceId {
    type Err = TypeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SourceId::new(s)
    }
}

impl Serialize for SourceId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for SourceId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SourceId::new(s).map_err(serde::de::Error::custom)
    }
}

/// An ordered pair of sources compared against each other.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourcePair {
    pub a: SourceId,
    pub b: SourceId,
}

impl SourcePair {
    pub fn new(a: SourceId, b: SourceId) -> Self {
        SourcePair { a, b }
    }
}

impl fmt::Display for SourcePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, TypeError> {
        if !(1..=12).contains(&month) {
            return Err(TypeError::Month(month));
        }
        Ok(YearMonth { year, month })
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Time bucket of an SP value: a whole year or one month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bucket {
    Year(i32),
    Month(YearMonth),
}

impl Bucket {
    pub fn year(&self) -> i32 {
        match self {
            Bucket::Year(y) => *y,
            Bucket::Month(ym) => ym.year,
        }
    }

    pub fn contains(&self, ym: YearMonth) -> bool {
        match self {
            Bucket::Year(y) => ym.year == *y,
            Bucket::Month(m) => *m == ym,
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bucket::Year(y) => write!(f, "{y:04}"),
            Bucket::Month(ym) => ym.fmt(f),
        }
    }
}

impl FromStr for Bucket {
    type Err = TypeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TypeError::Bucket(s.to_string());
        match s.split_once('-') {
            None => s.parse().map(Bucket::Year).map_err(|_| bad()),
            Some((y, m)) => {
                let year = y.parse().map_err(|_| bad())?;
                let month = m.parse().map_err(|_| bad())?;
                Ok(Bucket::Month(YearMonth::new(year, month)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Yearly,
    Monthly,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Yearly => "yearly",
            Granularity::Monthly => "monthly",
        })
    }
}

/// Inclusive range of analysis years (default 2010..=2020).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub start: i32,
    pub end: i32,
}

impl Default for YearWindow {
    fn default() -> Self {
        YearWindow { start: 2010, end: 2020 }
    }
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Result<Self, TypeError> {
        if end < start {
            return Err(TypeError::Window { start, end });
        }
        Ok(YearWindow { start, end })
    }

    pub fn contains_year(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }

    pub fn buckets(&self, granularity: Granularity) -> Vec<Bucket> {
        match granularity {
            Granularity::Yearly => self.years().map(Bucket::Year).collect(),
            Granularity::Monthly => self
                .years()
                .flat_map(|year| (1..=12).map(move |month| Bucket::Month(YearMonth { year, month })))
                .collect(),
        }
    }
}
