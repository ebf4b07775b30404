//! Bidirectional Granger tests between a TV and a Twitter SP series, with
//! ADF screening and at most one round of differencing per series.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use super::adf::{adf_test, AdfResult, MaxLag, Stationarity};
use super::granger::{granger_test, GrangerResult};
use super::StatsError;
use crate::polarity::{SpPoint, SpSeries};

pub const SIGNIFICANCE: f64 = 0.05;
pub const DEFAULT_LAGS: RangeInclusive<usize> = 1..=12;

pub const H1_DIRECTION: &str = "tv->twitter";
pub const H2_DIRECTION: &str = "twitter->tv";

/// `out[t] = v[t + 1] - v[t]`.
pub fn difference_values(v: &[f64]) -> Result<Vec<f64>, StatsError> {
    if v.len() < 2 {
        return Err(StatsError::TooShort { what: "series to difference".into(), needed: 2, found: v.len() });
    }
    Ok(v.windows(2).map(|w| w[1] - w[0]).collect())
}

/// First difference of a series. Each point takes the later bucket and is
/// flagged as filled if either endpoint was.
pub fn difference(series: &SpSeries) -> Result<SpSeries, StatsError> {
    difference_values(&series.values())?;
    let points = series
        .points
        .windows(2)
        .map(|w| SpPoint {
            bucket: w[1].bucket,
            value: w[1].value - w[0].value,
            n1: w[1].n1,
            n2: w[1].n2,
            filled: w[0].filled || w[1].filled,
        })
        .collect();
    Ok(SpSeries { points, ..series.clone() })
}

/// Stationarity screening of one input series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub label: String,
    pub initial: AdfResult,
    /// Present when the series failed the 5% rule and was differenced.
    pub differenced: Option<AdfResult>,
}

impl SeriesCheck {
    pub fn final_result(&self) -> &AdfResult {
        self.differenced.as_ref().unwrap_or(&self.initial)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisRow {
    /// `H1` (TV leads Twitter) or `H2` (Twitter leads TV).
    pub hypothesis: &'static str,
    pub result: GrangerResult,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub tv: SeriesCheck,
    pub twitter: SeriesCheck,
    /// Lag-major: for each lag, H1 then H2.
    pub rows: Vec<HypothesisRow>,
    pub min_significant_h1: Option<usize>,
    pub min_significant_h2: Option<usize>,
    pub note: String,
}

impl HypothesisReport {
    pub fn rows_for<'a>(&'a self, hypothesis: &'a str) -> impl Iterator<Item = &'a HypothesisRow> + 'a {
        self.rows.iter().filter(move |r| r.hypothesis == hypothesis)
    }

    pub fn significant_lags(&self, hypothesis: &str) -> Vec<usize> {
        self.rows_for(hypothesis).filter(|r| r.significant).map(|r| r.result.lag).collect()
    }
}

fn named(label: &str, e: StatsError) -> StatsError {
    match e {
        StatsError::TooShort { needed, found, .. } => StatsError::TooShort { what: format!("series `{label}`"), needed, found },
        StatsError::Degenerate(m) => StatsError::Degenerate(format!("series `{label}`: {m}")),
        StatsError::NonFinite(_) => StatsError::NonFinite(format!("series `{label}`")),
        other => other,
    }
}

fn screen(label: &str, values: &[f64]) -> Result<(SeriesCheck, Vec<f64>), StatsError> {
    let initial = adf_test(values, MaxLag::Auto).map_err(|e| named(label, e))?;
    if initial.conclusion == Stationarity::Stationary {
        return Ok((SeriesCheck { label: label.to_string(), initial, differenced: None }, values.to_vec()));
    }
    let diffed = difference_values(values)?;
    let second = adf_test(&diffed, MaxLag::Auto).map_err(|e| named(label, e))?;
    if second.conclusion != Stationarity::Stationary {
        return Err(StatsError::StillNonStationary {
            series: label.to_string(),
            statistic: second.statistic,
            crit_5pct: second.crit_5pct,
        });
    }
    Ok((SeriesCheck { label: label.to_string(), initial, differenced: Some(second) }, diffed))
}

/// Screens both series, aligns them (dropping the first point of an
/// undifferenced series when the other was differenced) and runs the
/// Granger grid in both directions.
pub fn run_hypotheses_values(
    tv_label: &str,
    tv: &[f64],
    tw_label: &str,
    tw: &[f64],
    lags: RangeInclusive<usize>,
) -> Result<HypothesisReport, StatsError> {
    if tv.len() != tw.len() {
        return Err(StatsError::LengthMismatch { what: tw_label.to_string(), expected: tv.len(), found: tw.len() });
    }
    if *lags.start() == 0 || lags.is_empty() {
        return Err(StatsError::LagRange { lag: *lags.start(), max: *lags.end() });
    }
    let (tv_check, tv_vals) = screen(tv_label, tv)?;
    let (tw_check, tw_vals) = screen(tw_label, tw)?;
    let n = tv_vals.len().min(tw_vals.len());
    let tv_vals = &tv_vals[tv_vals.len() - n..];
    let tw_vals = &tw_vals[tw_vals.len() - n..];
    for (label, len) in [(tv_label, tv_vals.len()), (tw_label, tw_vals.len())] {
        let needed = super::granger::min_length(*lags.end());
        if len < needed {
            return Err(StatsError::TooShort { what: format!("series `{label}`"), needed, found: len });
        }
    }

    let grid: Vec<(usize, bool)> = lags.clone().flat_map(|l| [(l, true), (l, false)]).collect();
    let rows = grid
        .par_iter()
        .map(|&(lag, h1)| {
            let result = if h1 {
                granger_test(tv_vals, tw_vals, lag, H1_DIRECTION)?
            } else {
                granger_test(tw_vals, tv_vals, lag, H2_DIRECTION)?
            };
            let significant = result.p_value < SIGNIFICANCE;
            Ok(HypothesisRow { hypothesis: if h1 { "H1" } else { "H2" }, result, significant })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;

    let min_sig = |h: &str| rows.iter().filter(|r| r.hypothesis == h && r.significant).map(|r| r.result.lag).min();
    Ok(HypothesisReport {
        min_significant_h1: min_sig("H1"),
        min_significant_h2: min_sig("H2"),
        tv: tv_check,
        twitter: tw_check,
        rows,
        note: format!(
            "p-values are uncorrected for testing {} lags per direction; expect about {:.1} false positives per direction under the null",
            lags.clone().count(),
            lags.count() as f64 * SIGNIFICANCE
        ),
    })
}

pub fn run_hypotheses(tv: &SpSeries, tw: &SpSeries, lags: RangeInclusive<usize>) -> Result<HypothesisReport, StatsError> {
    run_hypotheses_values(&tv.pair.to_string(), &tv.values(), &tw.pair.to_string(), &tw.values(), lags)
}
