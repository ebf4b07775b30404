//! Pairwise Granger causality F-test.

use serde::Serialize;

use super::ols::{ols, Design};
use super::special::f_sf;
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrangerResult {
    /// e.g. `tv->twitter`.
    pub direction: String,
    pub lag: usize,
    pub f_value: f64,
    pub p_value: f64,
    /// `n - lag` rows in both regressions.
    pub n_effective: usize,
    pub df_num: usize,
    pub df_den: usize,
    pub rss_restricted: f64,
    pub rss_unrestricted: f64,
}

/// Minimum series length for a test at `lag`.
pub fn min_length(lag: usize) -> usize {
    3 * lag + 4
}

/// Does `x` help forecast `y` at `lag`?
///
/// Restricted: `y_t ~ 1 + y_{t-1..t-lag}`; unrestricted adds `x_{t-1..t-lag}`.
/// `F = ((RSS_r - RSS_u) / lag) / (RSS_u / (n_eff - 2 lag - 1))`.
pub fn granger_test(x: &[f64], y: &[f64], lag: usize, direction: &str) -> Result<GrangerResult, StatsError> {
    if lag == 0 {
        return Err(StatsError::Degenerate("Granger lag must be at least 1".into()));
    }
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { what: "cause series".into(), expected: y.len(), found: x.len() });
    }
    let n = y.len();
    if n < min_length(lag) {
        return Err(StatsError::TooShort { what: format!("Granger series ({direction})"), needed: min_length(lag), found: n });
    }
    let rows = lag..n;
    let n_eff = rows.len();
    let resp: Vec<f64> = rows.clone().map(|t| y[t]).collect();

    let mut restricted = Design::new().constant(n_eff);
    for k in 1..=lag {
        restricted = restricted.column(format!("y_lag{k}"), rows.clone().map(|t| y[t - k]).collect());
    }
    let mut unrestricted = restricted.clone();
    for k in 1..=lag {
        unrestricted = unrestricted.column(format!("x_lag{k}"), rows.clone().map(|t| x[t - k]).collect());
    }
    let r = ols(&restricted, &resp)?;
    let u = ols(&unrestricted, &resp)?;

    let df_den = n_eff - 2 * lag - 1;
    let gain = (r.rss - u.rss).max(0.0);
    let f_value = if u.rss > 0.0 {
        (gain / lag as f64) / (u.rss / df_den as f64)
    } else if gain > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let p_value = f_sf(f_value, lag as f64, df_den as f64);
    Ok(GrangerResult {
        direction: direction.to_string(),
        lag,
        f_value,
        p_value,
        n_effective: n_eff,
        df_num: lag,
        df_den,
        rss_restricted: r.rss,
        rss_unrestricted: u.rss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|i| (a * i as f64).sin() + 0.4 * (b * i as f64).cos()).collect()
    }

    #[test]
    fn perfect_predictor() {
        let x = wave(60, 0.91, 2.3);
        let lag = 2;
        let y: Vec<f64> = (0..60).map(|t| if t >= lag { x[t - lag] } else { 0.0 }).collect();
        let r = granger_test(&x, &y, lag, "x->y").unwrap();
        assert!(r.rss_unrestricted < 1e-20);
        assert!(r.f_value > 1e12);
        assert!(r.p_value < 1e-12);
    }

    #[test]
    fn identical_series_rank_deficient() {
        let x = wave(40, 0.7, 1.9);
        let err = granger_test(&x, &x, 2, "x->x").unwrap_err();
        assert!(matches!(err, StatsError::RankDeficient { column } if column == "x_lag1"));
    }

    #[test]
    fn shortfall() {
        let x = wave(9, 0.7, 1.9);
        let y = wave(9, 0.3, 1.1);
        assert!(matches!(granger_test(&x, &y, 2, "x->y"), Err(StatsError::TooShort { needed: 10, .. })));
        assert!(granger_test(&x, &y[..8], 1, "x->y").is_err());
    }

    #[test]
    fn degrees_of_freedom() {
        // pure sinusoids are exactly AR(2), so mix in an aperiodic term
        let x: Vec<f64> = wave(132, 0.7, 1.9).iter().enumerate().map(|(i, v)| v + ((i * 7919) % 13) as f64 * 0.01).collect();
        let y: Vec<f64> = wave(132, 0.3, 1.1).iter().enumerate().map(|(i, v)| v + ((i * 104729) % 17) as f64 * 0.01).collect();
        let r = granger_test(&x, &y, 12, "x->y").unwrap();
        assert_eq!(r.n_effective, 120);
        assert_eq!(r.df_den, 95);
        assert!(r.rss_unrestricted <= r.rss_restricted);
    }
}
