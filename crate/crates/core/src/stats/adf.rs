//! Augmented Dickey-Fuller unit-root test, constant-only specification:
//!
//! `Δy_t = α + γ y_{t-1} + Σ_{k=1..p} δ_k Δy_{t-k} + ε_t`
//!
//! The statistic is `γ̂ / se(γ̂)`. With automatic lag selection, `p` minimizes
//! AIC over `0..=max_lag` on a common sample, after which the chosen model is
//! refit on all available observations.

use std::fmt;

use serde::Serialize;

use super::ols::{ols, Design, OlsFit};
use super::StatsError;

pub const MIN_ADF_LEN: usize = 20;

/// MacKinnon (2010) response-surface coefficients, constant only, one
/// variable: `cv(T) = b0 + b1/T + b2/T^2 + b3/T^3` for 1%, 5%, 10%.
const CRIT_CONST: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];

/// Critical values (1%, 5%, 10%) at effective sample size `nobs`.
pub fn critical_values(nobs: usize) -> [f64; 3] {
    let t = nobs as f64;
    CRIT_CONST.map(|b| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxLag {
    /// `floor(12 (n/100)^(1/4))`, capped at `n/2 - 2`; lag chosen by AIC.
    Auto,
    /// Use exactly this many augmentation lags.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stationarity {
    Stationary,
    NonStationary,
}

impl fmt::Display for Stationarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stationarity::Stationary => "stationary",
            Stationarity::NonStationary => "non-stationary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub crit_1pct: f64,
    pub crit_5pct: f64,
    pub crit_10pct: f64,
    pub lags_used: usize,
    /// Observations in the final regression.
    pub n: usize,
    pub conclusion: Stationarity,
}

pub fn schwert_max_lag(n: usize) -> usize {
    let schwert = (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize;
    schwert.min((n / 2).saturating_sub(2))
}

/// Regression of `Δy` on a constant, the lagged level and `p` lagged
/// differences, using rows `start..` of the difference series.
fn adf_regression(y: &[f64], p: usize, start: usize) -> Result<OlsFit, StatsError> {
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let rows = start..dy.len();
    let n = rows.len();
    let mut d = Design::new()
        .constant(n)
        .column("level_lag", rows.clone().map(|i| y[i]).collect());
    for k in 1..=p {
        d = d.column(format!("diff_lag{k}"), rows.clone().map(|i| dy[i - k]).collect());
    }
    let resp: Vec<f64> = rows.map(|i| dy[i]).collect();
    ols(&d, &resp)
}

pub fn adf_test(y: &[f64], max_lag: MaxLag) -> Result<AdfResult, StatsError> {
    if y.len() < MIN_ADF_LEN {
        return Err(StatsError::TooShort { what: "ADF series".into(), needed: MIN_ADF_LEN, found: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("ADF series".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    if var <= f64::EPSILON * mean.abs().max(1.0).powi(2) {
        return Err(StatsError::Degenerate("series has zero variance".into()));
    }

    let lags = match max_lag {
        MaxLag::Fixed(p) => {
            if p > (y.len() / 2).saturating_sub(2) {
                return Err(StatsError::TooShort {
                    what: format!("ADF series for {p} lags"),
                    needed: 2 * (p + 2),
                    found: y.len(),
                });
            }
            p
        }
        MaxLag::Auto => {
            let maxlag = schwert_max_lag(y.len());
            let mut best: Option<(f64, usize)> = None;
            for p in 0..=maxlag {
                let aic = adf_regression(y, p, maxlag)?.aic();
                if best.map_or(true, |(b, _)| aic < b) {
                    best = Some((aic, p));
                }
            }
            best.map(|(_, p)| p).unwrap_or(0)
        }
    };

    let fit = adf_regression(y, lags, lags)?;
    let statistic = fit.t_stat(1);
    let [c1, c5, c10] = critical_values(fit.n);
    let conclusion = if statistic < c5 { Stationarity::Stationary } else { Stationarity::NonStationary };
    Ok(AdfResult { statistic, crit_1pct: c1, crit_5pct: c5, crit_10pct: c10, lags_used: lags, n: fit.n, conclusion })
}
