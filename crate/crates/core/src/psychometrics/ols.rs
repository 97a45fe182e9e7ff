//! Ordinary least squares with classical standard errors and two-sided
//! t-distribution p-values.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float; // sqrt/ln/... in no_std builds

use crate::linalg::{qr_least_squares, LinalgError, Mat};
use crate::psychometrics::special::p_value_t;
use crate::psychometrics::StatError;

/// A fitted regression: one entry per predictor, in input order, plus the
/// intercept and fit summary.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
    pub df_residual: usize,
}

impl RegressionFit {
    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.coefficients[i])
    }

    pub fn p_value(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.p_values[i])
    }

    /// True where the two-sided p-value clears the conventional .05 bar.
    pub fn significant(&self) -> Vec<bool> {
        self.p_values.iter().map(|&p| p < 0.05).collect()
    }
}

/// Fits `y = intercept + X b + e` by Householder QR.
///
/// Standard errors come from `sigma^2 (X'X)^-1` with the residual variance on
/// `n - p - 1` degrees of freedom; p-values are two-sided t tails.
pub fn ols_regress(
    y: &[f64],
    predictors: &Mat,
    labels: &[&str],
) -> Result<RegressionFit, StatError> {
    let n = predictors.rows();
    let p = predictors.cols();
    if labels.len() != p {
        return Err(StatError::LabelCountMismatch { labels: labels.len(), columns: p });
    }
    if y.len() != n {
        return Err(StatError::LengthMismatch { left: y.len(), right: n });
    }
    if n <= p + 1 {
        return Err(StatError::TooFewObservations { n, needed: p + 2 });
    }
    if y.iter().any(|v| !v.is_finite()) || !predictors.is_finite() {
        return Err(StatError::NonFiniteInput);
    }

    // Design matrix with a leading intercept column.
    let mut design = Mat::zeros(n, p + 1);
    for i in 0..n {
        design.set(i, 0, 1.0);
        for j in 0..p {
            design.set(i, j + 1, predictors.get(i, j));
        }
    }

    let fit = qr_least_squares(&design, y).map_err(|e| match e {
        LinalgError::RankDeficient { column } => {
            let name = if column == 0 {
                "intercept".to_string()
            } else {
                labels[column - 1].to_string()
            };
            StatError::CollinearPredictor { name }
        }
        other => StatError::Linalg(other),
    })?;

    let df = n - p - 1;
    let sigma2 = fit.rss / df as f64;

    // (X'X)^-1 = R^-1 R^-T; we only need its diagonal.
    let mut xtx_inv_diag = Vec::with_capacity(p + 1);
    for i in 0..=p {
        let mut s = 0.0;
        for k in 0..=p {
            s += fit.r_inv.get(i, k) * fit.r_inv.get(i, k);
        }
        xtx_inv_diag.push(s);
    }

    let mean_y: f64 = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    if tss == 0.0 {
        return Err(StatError::ConstantInput);
    }
    let r_squared = (1.0 - fit.rss / tss).clamp(0.0, 1.0);

    let mut coefficients = Vec::with_capacity(p);
    let mut std_errors = Vec::with_capacity(p);
    let mut t_stats = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        let beta = fit.beta[j + 1];
        let se = (sigma2 * xtx_inv_diag[j + 1]).sqrt();
        let t = if se > 0.0 { beta / se } else { f64::INFINITY * beta.signum() };
        coefficients.push(beta);
        std_errors.push(se);
        t_stats.push(t);
        p_values.push(if se > 0.0 { p_value_t(t, df) } else { 0.0 });
    }

    Ok(RegressionFit {
        labels: labels.iter().map(|l| l.to_string()).collect(),
        coefficients,
        std_errors,
        t_stats,
        p_values,
        intercept: fit.beta[0],
        r_squared,
        n,
        df_residual: df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_data_is_recovered_exactly() {
        // y = 2 + 3a - b over a small grid.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for a in 0..4 {
            for b in 0..3 {
                rows.push(vec![a as f64, b as f64]);
                y.push(2.0 + 3.0 * a as f64 - b as f64);
            }
        }
        let x = Mat::from_rows(&rows);
        let fit = ols_regress(&y, &x, &["a", "b"]).unwrap();
        assert!((fit.intercept - 2.0).abs() < 1e-10);
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-10);
        assert!((fit.coefficients[1] + 1.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn six_point_bivariate_matches_hand_solution() {
        // x = 1..6, y chosen with known normal-equation solution:
        // slope = Sxy/Sxx, intercept = ybar - slope * xbar.
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ys = [2.0, 4.0, 5.0, 8.0, 9.0, 12.0];
        let xbar = 3.5;
        let ybar: f64 = ys.iter().sum::<f64>() / 6.0;
        let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
        let slope = sxy / sxx;
        let intercept = ybar - slope * xbar;

        let x = Mat::from_rows(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>());
        let fit = ols_regress(&ys, &x, &["x"]).unwrap();
        assert!((fit.coefficients[0] - slope).abs() < 1e-8);
        assert!((fit.intercept - intercept).abs() < 1e-8);
    }

    #[test]
    fn collinear_columns_are_named() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..8 {
            let a = i as f64;
            rows.push(vec![a, 2.0 * a]);
            y.push(a + if i % 2 == 0 { 0.1 } else { -0.1 });
        }
        let x = Mat::from_rows(&rows);
        match ols_regress(&y, &x, &["a", "double_a"]).unwrap_err() {
            StatError::CollinearPredictor { name } => assert_eq!(name, "double_a"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn too_few_observations_is_an_error() {
        // n must exceed p + 1; two points cannot support slope + intercept
        // plus a residual degree of freedom.
        let x = Mat::from_rows(&[vec![1.0], vec![2.0]]);
        let y = [1.0, 2.0];
        assert!(matches!(
            ols_regress(&y, &x, &["x"]).unwrap_err(),
            StatError::TooFewObservations { .. }
        ));
    }
}
