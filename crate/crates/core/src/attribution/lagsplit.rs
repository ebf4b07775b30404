//! Month windows that offset the TV and Twitter corpora by a lag.
//!
//! With lag `l` and TV leading, the TV side keeps months `1..=12-l` of each
//! year and the Twitter side keeps `1+l..=12`. When Twitter leads, the two
//! windows are swapped.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::AttributionError;
use crate::ingest::SpeakerTurn;

pub const MAX_SPLIT_LAG: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// TV corpus.
    A,
    /// Twitter corpus.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagDirection {
    TvLeads,
    TwitterLeads,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagSplit {
    pub months: RangeInclusive<u32>,
    pub kept: Vec<SpeakerTurn>,
    pub dropped: Vec<SpeakerTurn>,
}

pub fn months_for(lag: u32, side: Side, direction: LagDirection) -> RangeInclusive<u32> {
    let early = 1..=12 - lag;
    let late = 1 + lag..=12;
    match (side, direction) {
        (Side::A, LagDirection::TvLeads) | (Side::B, LagDirection::TwitterLeads) => early,
        (Side::A, LagDirection::TwitterLeads) | (Side::B, LagDirection::TvLeads) => late,
    }
}

pub fn lag_split(turns: &[SpeakerTurn], lag: u32, side: Side, direction: LagDirection) -> Result<LagSplit, AttributionError> {
    lag_split_with_cap(turns, lag, side, direction, MAX_SPLIT_LAG)
}

/// As [`lag_split`] with a configurable upper bound on `lag` (at most 11).
pub fn lag_split_with_cap(
    turns: &[SpeakerTurn],
    lag: u32,
    side: Side,
    direction: LagDirection,
    max_lag: u32,
) -> Result<LagSplit, AttributionError> {
    let max = max_lag.min(11);
    if lag < 1 || lag > max {
        return Err(AttributionError::LagRange { lag, max });
    }
    let months = months_for(lag, side, direction);
    let (kept, dropped) = turns.iter().cloned().partition(|t| months.contains(&t.year_month().month));
    Ok(LagSplit { months, kept, dropped })
}
