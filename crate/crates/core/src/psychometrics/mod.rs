//! Statistical validation machinery: correlations, convergent-correlation
//! tables, Cronbach's alpha, one-factor CFA, and OLS regression.

mod cfa;
mod ols;
mod special;

pub use cfa::{fit_one_factor_cfa, fml_and_gradient, CfaFailure, CfaFit, PSI_FLOOR};
pub use ols::{ols_regress, RegressionFit};
pub use special::{ln_gamma, p_value_t, reg_inc_beta};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float; // sqrt/ln/... in no_std builds

use crate::linalg::{LinalgError, Mat};
use crate::scales::{Domain, Keying, ScoreReport};

#[derive(Debug, Clone, PartialEq)]
pub enum StatError {
    LengthMismatch { left: usize, right: usize },
    TooFewObservations { n: usize, needed: usize },
    TooFewItems { k: usize, needed: usize },
    ConstantInput,
    ConstantColumn { label: String },
    NonFiniteInput,
    NotSymmetric { i: usize, j: usize },
    DiagonalNotUnit { i: usize },
    OutOfRange { i: usize, j: usize, value: f64 },
    LabelCountMismatch { labels: usize, columns: usize },
    UnknownLabel(String),
    CollinearPredictor { name: String },
    MissingDomain(Domain),
    ZeroTotalVariance,
    Linalg(LinalgError),
}

impl fmt::Display for StatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatError::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            StatError::TooFewObservations { n, needed } => {
                write!(f, "{n} observations, need at least {needed}")
            }
            StatError::TooFewItems { k, needed } => {
                write!(f, "{k} items, need at least {needed}")
            }
            StatError::ConstantInput => write!(f, "input vector is constant"),
            StatError::ConstantColumn { label } => {
                write!(f, "column '{label}' is constant; correlation undefined")
            }
            StatError::NonFiniteInput => write!(f, "input contains non-finite values"),
            StatError::NotSymmetric { i, j } => {
                write!(f, "matrix asymmetric at ({i},{j})")
            }
            StatError::DiagonalNotUnit { i } => {
                write!(f, "diagonal entry {i} is not 1")
            }
            StatError::OutOfRange { i, j, value } => {
                write!(f, "entry ({i},{j}) = {value} outside [-1,1]")
            }
            StatError::LabelCountMismatch { labels, columns } => {
                write!(f, "{labels} labels for {columns} columns")
            }
            StatError::UnknownLabel(l) => write!(f, "unknown label '{l}'"),
            StatError::CollinearPredictor { name } => {
                write!(f, "predictor '{name}' is collinear with earlier columns")
            }
            StatError::MissingDomain(d) => write!(f, "score report lacks domain {d}"),
            StatError::ZeroTotalVariance => write!(f, "total score variance is zero"),
            StatError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StatError {}

impl From<LinalgError> for StatError {
    fn from(e: LinalgError) -> Self {
        StatError::Linalg(e)
    }
}

/// Product-moment correlation of two equal-length, non-constant vectors.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatError> {
    if x.len() != y.len() {
        return Err(StatError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 3 {
        return Err(StatError::TooFewObservations { n: x.len(), needed: 3 });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatError::NonFiniteInput);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// A labeled, validated correlation matrix.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    labels: Vec<String>,
    values: Mat,
}

impl CorrelationMatrix {
    pub fn new(labels: Vec<String>, values: Mat) -> Result<Self, StatError> {
        let p = labels.len();
        if values.rows() != p || values.cols() != p {
            return Err(StatError::LabelCountMismatch { labels: p, columns: values.cols() });
        }
        for i in 0..p {
            if (values.get(i, i) - 1.0).abs() > 1e-12 {
                return Err(StatError::DiagonalNotUnit { i });
            }
            for j in 0..p {
                let v = values.get(i, j);
                if !v.is_finite() {
                    return Err(StatError::NonFiniteInput);
                }
                if v.abs() > 1.0 + 1e-12 {
                    return Err(StatError::OutOfRange { i, j, value: v });
                }
                if (v - values.get(j, i)).abs() > 1e-12 {
                    return Err(StatError::NotSymmetric { i, j });
                }
            }
        }
        Ok(CorrelationMatrix { labels, values })
    }

    /// Pairwise correlations over the columns of an observation matrix.
    pub fn from_columns(labels: Vec<String>, data: &Mat) -> Result<Self, StatError> {
        let k = data.cols();
        if labels.len() != k {
            return Err(StatError::LabelCountMismatch { labels: labels.len(), columns: k });
        }
        let columns: Vec<Vec<f64>> = (0..k).map(|c| data.column(c)).collect();
        let mut values = Mat::identity(k);
        for i in 0..k {
            for j in (i + 1)..k {
                let r = pearson(&columns[i], &columns[j]).map_err(|e| match e {
                    StatError::ConstantInput => {
                        let label = if is_constant(&columns[i]) {
                            labels[i].clone()
                        } else {
                            labels[j].clone()
                        };
                        StatError::ConstantColumn { label }
                    }
                    other => other,
                })?;
                values.set(i, j, r);
                values.set(j, i, r);
            }
        }
        CorrelationMatrix::new(labels, values)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    /// The matrix with one labeled item removed.
    pub fn without_item(&self, label: &str) -> Result<Self, StatError> {
        let drop = self
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| StatError::UnknownLabel(label.into()))?;
        let keep: Vec<usize> = (0..self.len()).filter(|&i| i != drop).collect();
        let mut values = Mat::zeros(keep.len(), keep.len());
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                values.set(a, b, self.values.get(i, j));
            }
        }
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        CorrelationMatrix::new(labels, values)
    }
}

/// Per-domain convergent correlations between two sets of score reports,
/// aligned by index, plus their mean.
#[derive(Debug, Clone)]
pub struct ConvergentTable {
    pub per_domain: [(Domain, f64); 5],
    pub average: f64,
}

pub fn convergent_table(
    inputs: &[ScoreReport],
    outputs: &[ScoreReport],
) -> Result<ConvergentTable, StatError> {
    if inputs.len() != outputs.len() {
        return Err(StatError::LengthMismatch { left: inputs.len(), right: outputs.len() });
    }
    let mut per_domain = [(Domain::Openness, 0.0); 5];
    let mut sum = 0.0;
    for (slot, domain) in per_domain.iter_mut().zip(Domain::ALL) {
        let mut xs = Vec::with_capacity(inputs.len());
        let mut ys = Vec::with_capacity(outputs.len());
        for (a, b) in inputs.iter().zip(outputs) {
            xs.push(*a.domain_scores.get(&domain).ok_or(StatError::MissingDomain(domain))?);
            ys.push(*b.domain_scores.get(&domain).ok_or(StatError::MissingDomain(domain))?);
        }
        let r = pearson(&xs, &ys)?;
        *slot = (domain, r);
        sum += r;
    }
    Ok(ConvergentTable { per_domain, average: sum / 5.0 })
}

/// Cronbach's alpha over an N x k response matrix.
///
/// Reverse-keyed columns are recoded first; reflection around any constant
/// leaves variances untouched, so negation suffices. Sample variances use the
/// N-1 denominator.
pub fn cronbach_alpha(matrix: &Mat, keying: &[Keying]) -> Result<f64, StatError> {
    let n = matrix.rows();
    let k = matrix.cols();
    if k < 2 {
        return Err(StatError::TooFewItems { k, needed: 2 });
    }
    if n < 3 {
        return Err(StatError::TooFewObservations { n, needed: 3 });
    }
    if keying.len() != k {
        return Err(StatError::LabelCountMismatch { labels: keying.len(), columns: k });
    }
    if !matrix.is_finite() {
        return Err(StatError::NonFiniteInput);
    }

    let mut item_var_sum = 0.0;
    let mut totals = alloc::vec![0.0; n];
    for j in 0..k {
        let sign = match keying[j] {
            Keying::Positive => 1.0,
            Keying::Reversed => -1.0,
        };
        let col: Vec<f64> = (0..n).map(|i| sign * matrix.get(i, j)).collect();
        item_var_sum += sample_variance(&col);
        for (t, v) in totals.iter_mut().zip(&col) {
            *t += v;
        }
    }
    let total_var = sample_variance(&totals);
    if total_var == 0.0 {
        return Err(StatError::ZeroTotalVariance);
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var_sum / total_var))
}

/// Reliability summary for one domain's item set.
#[derive(Debug, Clone)]
pub struct AlphaReport {
    pub domain: Domain,
    pub alpha: f64,
    pub k_items: usize,
    pub dropped_items: Vec<String>,
}

pub fn alpha_report(
    domain: Domain,
    matrix: &Mat,
    keying: &[Keying],
) -> Result<AlphaReport, StatError> {
    Ok(AlphaReport {
        domain,
        alpha: cronbach_alpha(matrix, keying)?,
        k_items: matrix.cols(),
        dropped_items: Vec::new(),
    })
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn pearson_of_self_is_one() {
        let x = [1.0, 2.0, 3.0, 5.0];
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn pearson_of_negated_affine_is_minus_one() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| -v + 7.0).collect();
        assert_eq!(pearson(&x, &y).unwrap(), -1.0);
    }

    #[test]
    fn pearson_hand_computed_case() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 1.0, 4.0, 3.0];
        assert!((pearson(&x, &y).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_constant_input() {
        let x = [2.0, 2.0, 2.0, 2.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pearson(&x, &y).unwrap_err(), StatError::ConstantInput);
    }

    #[test]
    fn alpha_is_one_for_duplicated_columns() {
        let col = [1.0, 4.0, 2.0, 5.0, 3.0, 2.0];
        let rows: Vec<Vec<f64>> = col.iter().map(|&v| vec![v; 5]).collect();
        let m = Mat::from_rows(&rows);
        let alpha = cronbach_alpha(&m, &[Keying::Positive; 5]).unwrap();
        assert!((alpha - 1.0).abs() < 1e-9);
    }

    #[test]
    fn alpha_matches_direct_formula() {
        let m = Mat::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 3.0, 3.0],
            vec![3.0, 4.0, 5.0],
            vec![4.0, 4.0, 5.0],
            vec![5.0, 5.0, 4.0],
        ]);
        let keying = [Keying::Positive; 3];
        let got = cronbach_alpha(&m, &keying).unwrap();

        // Independent direct computation.
        let k = 3.0;
        let vars: f64 = (0..3).map(|j| sample_variance(&m.column(j))).sum();
        let totals: Vec<f64> = (0..5).map(|i| m.row(i).iter().sum()).collect();
        let want = k / (k - 1.0) * (1.0 - vars / sample_variance(&totals));
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn alpha_recodes_reversed_columns() {
        // Second column is the mirrored first: recoding makes them identical.
        let m = Mat::from_rows(&[
            vec![1.0, 5.0],
            vec![2.0, 4.0],
            vec![3.0, 3.0],
            vec![5.0, 1.0],
        ]);
        let alpha = cronbach_alpha(&m, &[Keying::Positive, Keying::Reversed]).unwrap();
        assert!((alpha - 1.0).abs() < 1e-9);
    }

    #[test]
    fn convergent_table_is_one_for_identical_reports() {
        let mut reports = Vec::new();
        for i in 0..6 {
            let mut ds = alloc::collections::BTreeMap::new();
            for (k, d) in Domain::ALL.iter().enumerate() {
                ds.insert(*d, (i * (k + 1)) as f64 + (i as f64) * 0.5);
            }
            reports.push(ScoreReport { domain_scores: ds, facet_scores: None });
        }
        let table = convergent_table(&reports, &reports).unwrap();
        for (_, r) in table.per_domain {
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert!((table.average - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_matrix_rejects_asymmetry() {
        let mut m = Mat::identity(3);
        m.set(0, 1, 0.5);
        m.set(1, 0, 0.4);
        assert!(matches!(
            CorrelationMatrix::new(
                vec!["a".to_string(), "b".to_string(), "c".to_string()],
                m
            ),
            Err(StatError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn from_columns_names_the_constant_column() {
        let m = Mat::from_rows(&[
            vec![1.0, 2.0, 7.0],
            vec![2.0, 1.0, 7.0],
            vec![3.0, 4.0, 7.0],
            vec![4.0, 3.0, 7.0],
        ]);
        let labels = vec!["a".to_string(), "b".to_string(), "flat".to_string()];
        match CorrelationMatrix::from_columns(labels, &m).unwrap_err() {
            StatError::ConstantColumn { label } => assert_eq!(label, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
