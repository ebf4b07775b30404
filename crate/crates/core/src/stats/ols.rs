//! Ordinary least squares via Householder QR.

use super::StatsError;

/// Named regressor columns of a design matrix.
#[derive(Debug, Clone, Default)]
pub struct Design {
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
}

impl Design {
    pub fn new() -> Self {
        Design::default()
    }

    pub fn column(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.names.push(name.into());
        self.cols.push(values);
        self
    }

    pub fn constant(self, n: usize) -> Self {
        self.column("const", vec![1.0; n])
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub rss: f64,
    pub n: usize,
    pub k: usize,
}

impl OlsFit {
    pub fn t_stat(&self, j: usize) -> f64 {
        self.coefficients[j] / self.std_errors[j]
    }

    /// `n ln(RSS/n) + 2k`; constant terms of the Gaussian likelihood dropped.
    pub fn aic(&self) -> f64 {
        let n = self.n as f64;
        n * (self.rss / n).ln() + 2.0 * self.k as f64
    }
}

/// Relative size below which a pivot marks a column as linearly dependent.
const RANK_TOL: f64 = 1e-9;

pub fn ols(design: &Design, y: &[f64]) -> Result<OlsFit, StatsError> {
    let n = y.len();
    let k = design.ncols();
    if k == 0 {
        return Err(StatsError::Degenerate("design has no columns".into()));
    }
    if n <= k {
        return Err(StatsError::TooShort { what: "regression rows".into(), needed: k + 1, found: n });
    }
    for (name, c) in design.names.iter().zip(&design.cols) {
        if c.len() != n {
            return Err(StatsError::LengthMismatch { what: name.clone(), expected: n, found: c.len() });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(name.clone()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("response".into()));
    }

    let mut a = design.cols.clone();
    let mut qty = y.to_vec();
    let mut r = vec![vec![0.0; k]; k];
    for j in 0..k {
        let col_norm = design.cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if col_norm == 0.0 || norm <= RANK_TOL * col_norm {
            return Err(StatsError::RankDeficient { column: design.names[j].clone() });
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm2;
            col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
        };
        for col in a.iter_mut().skip(j) {
            reflect(&mut col[j..]);
        }
        reflect(&mut qty[j..]);
        for (i, row) in r.iter_mut().enumerate().take(j + 1) {
            row[j] = a[j][i];
        }
    }

    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[i][j] * beta[j]).sum();
        beta[i] = (qty[i] - s) / r[i][i];
    }

    let rss: f64 = (0..n)
        .map(|t| {
            let fit: f64 = design.cols.iter().zip(&beta).map(|(c, b)| c[t] * b).sum();
            (y[t] - fit).powi(2)
        })
        .sum();

    // diag((R^T R)^-1) = row norms of R^-1
    let mut rinv = vec![vec![0.0; k]; k];
    for i in 0..k {
        rinv[i][i] = 1.0 / r[i][i];
        for j in (0..i).rev() {
            let s: f64 = (j + 1..=i).map(|m| r[j][m] * rinv[m][i]).sum();
            rinv[j][i] = -s / r[j][j];
        }
    }
    let sigma2 = rss / (n - k) as f64;
    let std_errors = rinv
        .iter()
        .map(|row| (sigma2 * row.iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();

    Ok(OlsFit { coefficients: beta, std_errors, rss, n, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_two_regressors() {
        // y = 1 + 2 x exactly plus a symmetric perturbation orthogonal to [1, x]
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let e = [1.0, -1.0, -1.0, 1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 1.0];
        let y: Vec<f64> = x.iter().zip(e).map(|(x, e)| 1.0 + 2.0 * x + e).collect();
        // Hand solution: xbar = 4.5, ybar = 10, Sxx = 82.5,
        // Sxy = sum (x - 4.5)(y - 10) = 165 + sum (x - 4.5) e = 165 + 0 = 165
        // slope = 2, intercept = 10 - 2 * 4.5 = 1, RSS = sum e^2 = 8.
        let fit = ols(&Design::new().constant(10).column("x", x), &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-10);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-10);
        assert!((fit.rss - 8.0).abs() < 1e-10);
        // se(slope) = sqrt(sigma2 / Sxx) with sigma2 = 8 / 8 = 1
        assert!((fit.std_errors[1] - (1.0f64 / 82.5).sqrt()).abs() < 1e-12);
        // se(intercept) = sqrt(sigma2 (1/n + xbar^2 / Sxx))
        assert!((fit.std_errors[0] - (0.1 + 4.5f64 * 4.5 / 82.5).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn collinear_column_is_named() {
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let x2: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let d = Design::new().constant(8).column("x", x).column("x_again", x2);
        match ols(&d, &y) {
            Err(StatsError::RankDeficient { column }) => assert_eq!(column, "x_again"),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            ols(&Design::new().constant(2).column("x", vec![1.0, 2.0]), &[1.0, 2.0]),
            Err(StatsError::TooShort { .. })
        ));
    }

    #[test]
    fn nested_model_rss_not_smaller() {
        let n = 40;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let z: Vec<f64> = (0..n).map(|i| (i as f64 * 1.91).cos()).collect();
        let y: Vec<f64> = (0..n).map(|i| x[i] + 0.1 * (i as f64 * 0.13).sin()).collect();
        let small = ols(&Design::new().constant(n).column("x", x.clone()), &y).unwrap();
        let big = ols(&Design::new().constant(n).column("x", x).column("z", z), &y).unwrap();
        assert!(big.rss <= small.rss + 1e-9);
    }
}
