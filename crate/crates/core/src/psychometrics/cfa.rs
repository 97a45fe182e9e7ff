//! Single-factor confirmatory factor analysis by maximum likelihood.
//!
//! Fits `Sigma(theta) = lambda lambda' + Psi` (factor variance fixed at 1,
//! `Psi` diagonal) to an item correlation matrix by minimizing the ML
//! discrepancy
//!
//! ```text
//! F = ln|Sigma| - ln|R| + tr(R Sigma^-1) - p
//! ```
//!
//! with BFGS over `(lambda, ln(psi - floor))`; the log-parameterization keeps
//! every uniqueness above the Heywood floor. Non-convergence is a reported
//! state, not an error: singular inputs are diagnosed up front as
//! multicollinearity with the offending item pair named, mirroring how
//! redundant items surface in practice.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float; // sqrt/ln/... in no_std builds

use crate::linalg::{cholesky_psd, lu_det, power_iteration, spd_inverse, spd_log_det, Mat};
use crate::psychometrics::{CorrelationMatrix, StatError};

/// Smallest admissible uniqueness; solutions pressed against it are flagged
/// as Heywood cases instead of being allowed to go negative.
pub const PSI_FLOOR: f64 = 1e-4;

const MAX_ITER: usize = 500;
const GRAD_TOL: f64 = 1e-7;
const DET_GATE: f64 = 1e-10;
const CORR_GATE: f64 = 1.0 - 1e-9;

/// Why a fit ended without a usable solution.
#[derive(Debug, Clone, PartialEq)]
pub enum CfaFailure {
    /// The input correlation matrix is (numerically) singular; the named pair
    /// is the most collinear one.
    Multicollinearity { item_a: String, item_b: String, r: f64 },
    /// The optimizer hit its iteration cap before the gradient vanished.
    IterationLimit,
}

impl fmt::Display for CfaFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfaFailure::Multicollinearity { item_a, item_b, r } => write!(
                f,
                "multicollinearity: items '{item_a}' and '{item_b}' correlate at r = {r:.6}"
            ),
            CfaFailure::IterationLimit => write!(f, "iteration cap reached before convergence"),
        }
    }
}

/// A one-factor CFA solution (standardized when converged).
#[derive(Debug, Clone)]
pub struct CfaFit {
    pub labels: Vec<String>,
    pub loadings: Vec<f64>,
    pub uniquenesses: Vec<f64>,
    pub fit_value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub heywood_flags: Vec<String>,
    pub failure: Option<CfaFailure>,
}

impl CfaFit {
    pub fn loading(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.loadings[i])
    }

    fn not_converged(labels: Vec<String>, failure: CfaFailure) -> Self {
        CfaFit {
            labels,
            loadings: Vec::new(),
            uniquenesses: Vec::new(),
            fit_value: f64::NAN,
            converged: false,
            iterations: 0,
            heywood_flags: Vec::new(),
            failure: Some(failure),
        }
    }
}

/// ML discrepancy and its gradient with respect to `(lambda, psi)`.
///
/// Exposed so the analytic gradient can be validated against finite
/// differences; the optimizer chains this through the log-parameterization.
pub fn fml_and_gradient(
    corr: &CorrelationMatrix,
    lambda: &[f64],
    psi: &[f64],
) -> Result<(f64, Vec<f64>), StatError> {
    let p = corr.len();
    if lambda.len() != p || psi.len() != p {
        return Err(StatError::LengthMismatch { left: lambda.len(), right: p });
    }
    if psi.iter().any(|&v| v <= 0.0) {
        return Err(StatError::NonFiniteInput);
    }
    let r = corr.values();

    let mut sigma = Mat::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            let v = lambda[i] * lambda[j] + if i == j { psi[i] } else { 0.0 };
            sigma.set(i, j, v);
        }
    }
    let l = cholesky_psd(&sigma, 0.0).map_err(StatError::Linalg)?;
    let sigma_inv = spd_inverse(&l);
    let ln_det_sigma = spd_log_det(&l);
    let ln_det_r = lu_det(r).map_err(StatError::Linalg)?.ln();

    // tr(R Sigma^-1)
    let mut trace = 0.0;
    for i in 0..p {
        for j in 0..p {
            trace += r.get(i, j) * sigma_inv.get(j, i);
        }
    }
    let f = ln_det_sigma - ln_det_r + trace - p as f64;

    // A = Sigma^-1 (Sigma - R) Sigma^-1 = Sigma^-1 - Sigma^-1 R Sigma^-1
    let ri = r.matmul(&sigma_inv);
    let siri = sigma_inv.matmul(&ri);
    let mut grad = vec![0.0; 2 * p];
    for i in 0..p {
        let mut g_lambda = 0.0;
        for j in 0..p {
            let a_ij = sigma_inv.get(i, j) - siri.get(i, j);
            g_lambda += a_ij * lambda[j];
        }
        grad[i] = 2.0 * g_lambda;
        grad[p + i] = sigma_inv.get(i, i) - siri.get(i, i);
    }
    Ok((f, grad))
}

/// Pre-fit singularity gate plus the ML fit itself.
pub fn fit_one_factor_cfa(corr: &CorrelationMatrix) -> Result<CfaFit, StatError> {
    let p = corr.len();
    if p < 3 {
        return Err(StatError::TooFewItems { k: p, needed: 3 });
    }
    let labels: Vec<String> = corr.labels().to_vec();
    let r = corr.values();

    // Singular or near-duplicated input cannot be fit; diagnose instead.
    let det = lu_det(r).map_err(StatError::Linalg)?;
    let (bi, bj, br) = max_abs_off_diagonal(r);
    if det.abs() < DET_GATE || br.abs() >= CORR_GATE {
        return Ok(CfaFit::not_converged(
            labels.clone(),
            CfaFailure::Multicollinearity {
                item_a: labels[bi].clone(),
                item_b: labels[bj].clone(),
                r: br,
            },
        ));
    }

    // Start from the leading eigenpair of R.
    let (eig, v) = power_iteration(r, 100);
    let mut lambda: Vec<f64> = v
        .iter()
        .map(|&vi| (vi * eig.max(0.1).sqrt()).clamp(-0.95, 0.95))
        .collect();
    let mut t: Vec<f64> = lambda
        .iter()
        .map(|&l| ((1.0 - l * l).clamp(0.05, 0.95) - PSI_FLOOR).ln())
        .collect();

    // BFGS over theta = (lambda, t) with psi = floor + exp(t).
    let dim = 2 * p;
    let mut h = Mat::identity(dim);
    let eval = |lambda: &[f64], t: &[f64]| -> Result<(f64, Vec<f64>), StatError> {
        let psi: Vec<f64> = t.iter().map(|&ti| PSI_FLOOR + ti.exp()).collect();
        let (f, g) = fml_and_gradient_unchecked(corr, lambda, &psi)?;
        let mut g_theta = g;
        for j in 0..lambda.len() {
            g_theta[lambda.len() + j] *= psi[j] - PSI_FLOOR;
        }
        Ok((f, g_theta))
    };

    let (mut f, mut grad) = eval(&lambda, &t)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < GRAD_TOL {
            converged = true;
            break;
        }
        let mut dir: Vec<f64> = (0..dim)
            .map(|i| -(0..dim).map(|j| h.get(i, j) * grad[j]).sum::<f64>())
            .collect();
        let mut slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if slope >= 0.0 {
            h = Mat::identity(dim);
            for (d, g) in dir.iter_mut().zip(&grad) {
                *d = -g;
            }
            slope = -grad.iter().map(|g| g * g).sum::<f64>();
        }

        // Armijo backtracking.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let cand_lambda: Vec<f64> = lambda
                .iter()
                .zip(&dir)
                .map(|(x, d)| x + step * d)
                .collect();
            let cand_t: Vec<f64> = t
                .iter()
                .zip(dir.iter().skip(p))
                .map(|(x, d)| (x + step * d).clamp(-30.0, 5.0))
                .collect();
            if let Ok((cf, cg)) = eval(&cand_lambda, &cand_t) {
                if cf.is_finite() && cf <= f + 1e-4 * step * slope {
                    accepted = Some((cand_lambda, cand_t, cf, cg));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((new_lambda, new_t, new_f, new_grad)) = accepted else {
            // Line search stalled; treat the current point as final.
            converged = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < 1e-4;
            break;
        };

        // BFGS inverse-Hessian update.
        let s: Vec<f64> = new_lambda
            .iter()
            .chain(&new_t)
            .zip(lambda.iter().chain(&t))
            .map(|(a, b)| a - b)
            .collect();
        let yv: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|j| h.get(i, j) * yv[j]).sum())
                .collect();
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            // H' = (I - rho s y')H(I - rho y s') + rho s s'
            for i in 0..dim {
                for j in 0..dim {
                    let v = h.get(i, j) - rho * (s[i] * hy[j] + hy[i] * s[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                    h.set(i, j, v);
                }
            }
        } else {
            h = Mat::identity(dim);
        }

        let stalled = (f - new_f).abs() <= 1e-13 * (1.0 + f.abs());
        lambda = new_lambda;
        t = new_t;
        f = new_f;
        grad = new_grad;
        if stalled && grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < 1e-4 {
            converged = true;
            break;
        }
    }

    let psi: Vec<f64> = t.iter().map(|&ti| PSI_FLOOR + ti.exp()).collect();

    if !converged {
        let mut fit = CfaFit::not_converged(labels, CfaFailure::IterationLimit);
        fit.iterations = iterations;
        fit.fit_value = f;
        return Ok(fit);
    }

    // Standardize so loading^2 + uniqueness = 1 per item, and orient the
    // factor with a positive loading sum.
    let mut loadings = Vec::with_capacity(p);
    let mut uniquenesses = Vec::with_capacity(p);
    for j in 0..p {
        let total = (lambda[j] * lambda[j] + psi[j]).sqrt();
        loadings.push(lambda[j] / total);
        uniquenesses.push(psi[j] / (total * total));
    }
    if loadings.iter().sum::<f64>() < 0.0 {
        for l in &mut loadings {
            *l = -*l;
        }
    }
    let heywood_flags = labels
        .iter()
        .zip(&psi)
        .filter(|(_, &ps)| ps <= PSI_FLOOR + 1e-6)
        .map(|(l, _)| l.clone())
        .collect();

    Ok(CfaFit {
        labels,
        loadings,
        uniquenesses,
        fit_value: f,
        converged: true,
        iterations,
        heywood_flags,
        failure: None,
    })
}

/// Same as [`fml_and_gradient`] minus the argument validation, for the hot
/// optimizer loop.
fn fml_and_gradient_unchecked(
    corr: &CorrelationMatrix,
    lambda: &[f64],
    psi: &[f64],
) -> Result<(f64, Vec<f64>), StatError> {
    fml_and_gradient(corr, lambda, psi)
}

fn max_abs_off_diagonal(r: &Mat) -> (usize, usize, f64) {
    let p = r.rows();
    let mut best = (0, 1, 0.0);
    for i in 0..p {
        for j in (i + 1)..p {
            if r.get(i, j).abs() > best.2.abs() {
                best = (i, j, r.get(i, j));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn equicorrelated(p: usize, rho: f64) -> CorrelationMatrix {
        let mut m = Mat::identity(p);
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    m.set(i, j, rho);
                }
            }
        }
        let labels: Vec<String> = (0..p).map(|i| alloc::format!("item{i}")).collect();
        CorrelationMatrix::new(labels, m).unwrap()
    }

    #[test]
    fn equicorrelated_solution_is_sqrt_rho() {
        let corr = equicorrelated(4, 0.49);
        let fit = fit_one_factor_cfa(&corr).unwrap();
        assert!(fit.converged, "failure: {:?}", fit.failure);
        for &l in &fit.loadings {
            assert!((l - 0.7).abs() < 0.01, "loading {l}");
        }
        assert!(fit.fit_value.abs() < 1e-8);
    }

    #[test]
    fn standardization_holds_at_the_solution() {
        let corr = equicorrelated(5, 0.36);
        let fit = fit_one_factor_cfa(&corr).unwrap();
        assert!(fit.converged);
        for (l, u) in fit.loadings.iter().zip(&fit.uniquenesses) {
            assert!((l * l + u - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicated_pair_is_diagnosed_by_name() {
        let mut m = Mat::identity(4);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    m.set(i, j, 0.4);
                }
            }
        }
        m.set(1, 2, 1.0);
        m.set(2, 1, 1.0);
        let labels = ["Fretful", "Envious", "Jealous", "Moody"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let corr = CorrelationMatrix::new(labels, m).unwrap();
        let fit = fit_one_factor_cfa(&corr).unwrap();
        assert!(!fit.converged);
        match fit.failure.unwrap() {
            CfaFailure::Multicollinearity { item_a, item_b, r } => {
                assert_eq!(item_a, "Envious");
                assert_eq!(item_b, "Jealous");
                assert!((r - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected failure {other:?}"),
        }
    }

    #[test]
    fn dropping_the_duplicate_restores_convergence() {
        let mut m = Mat::identity(4);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    m.set(i, j, 0.4);
                }
            }
        }
        m.set(1, 2, 1.0);
        m.set(2, 1, 1.0);
        let labels: Vec<String> = ["Fretful", "Envious", "Jealous", "Moody"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let corr = CorrelationMatrix::new(labels, m).unwrap();
        let reduced = corr.without_item("Jealous").unwrap();
        let fit = fit_one_factor_cfa(&reduced).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.labels, ["Fretful", "Envious", "Moody"]);
    }

    #[test]
    fn too_few_items_is_an_error() {
        let corr = equicorrelated(2, 0.3);
        assert!(matches!(
            fit_one_factor_cfa(&corr).unwrap_err(),
            StatError::TooFewItems { .. }
        ));
    }
}
