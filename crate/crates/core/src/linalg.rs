//! Minimal dense linear algebra for the small matrices this crate works with
//! (correlation blocks, item covariances, OLS design matrices). Row-major
//! `f64` storage, no BLAS, deterministic operation order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

// f64 math methods (sqrt, ln, ...) come from this trait in no_std
// builds; std test builds resolve the inherent methods instead.
#[allow(unused_imports)]
use num_traits::Float;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from row-major data; panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "dimension mismatch in matvec");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// A pivot went negative beyond tolerance while factoring a matrix that
    /// was expected to be positive semi-definite.
    NotPositiveSemiDefinite { pivot: usize, value: f64 },
    /// A zero pivot column carried non-zero mass, so the matrix is not a
    /// clean degenerate PSD matrix.
    InconsistentDegeneracy { pivot: usize },
    /// A design-matrix column is (numerically) linearly dependent on earlier
    /// columns.
    RankDeficient { column: usize },
    NotSquare,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotPositiveSemiDefinite { pivot, value } => write!(
                f,
                "matrix is not positive semi-definite (pivot {pivot} = {value:e})"
            ),
            LinalgError::InconsistentDegeneracy { pivot } => write!(
                f,
                "zero pivot {pivot} has non-zero column mass; matrix is not PSD"
            ),
            LinalgError::RankDeficient { column } => {
                write!(f, "design matrix is rank deficient at column {column}")
            }
            LinalgError::NotSquare => write!(f, "matrix is not square"),
        }
    }
}

impl core::error::Error for LinalgError {}

/// Lower-triangular Cholesky factor of a symmetric PSD matrix.
///
/// Pivots within `zero_tol` of zero are accepted as exact degeneracies (the
/// corresponding factor row is zeroed), which covers zero-variance facets and
/// perfectly correlated pairs. Pivots below `-zero_tol` fail.
pub fn cholesky_psd(a: &Mat, zero_tol: f64) -> Result<Mat, LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::NotSquare);
    }
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        let mut d = a.get(i, i);
        for k in 0..i {
            d -= l.get(i, k) * l.get(i, k);
        }
        if d < -zero_tol {
            return Err(LinalgError::NotPositiveSemiDefinite { pivot: i, value: d });
        }
        if d <= zero_tol {
            // Degenerate direction: the rest of the column must vanish too.
            for j in (i + 1)..n {
                let mut r = a.get(j, i);
                for k in 0..i {
                    r -= l.get(j, k) * l.get(i, k);
                }
                if r.abs() > zero_tol.sqrt().max(1e-12) {
                    return Err(LinalgError::InconsistentDegeneracy { pivot: i });
                }
            }
            continue;
        }
        let di = d.sqrt();
        l.set(i, i, di);
        for j in (i + 1)..n {
            let mut r = a.get(j, i);
            for k in 0..i {
                r -= l.get(j, k) * l.get(i, k);
            }
            l.set(j, i, r / di);
        }
    }
    Ok(l)
}

/// Determinant via LU decomposition with partial pivoting. Returns 0 for
/// exactly singular input.
pub fn lu_det(a: &Mat) -> Result<f64, LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::NotSquare);
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        let mut best = m.get(k, k).abs();
        for r in (k + 1)..n {
            let v = m.get(r, k).abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Ok(0.0);
        }
        if piv != k {
            for c in 0..n {
                let a = m.get(k, c);
                let b = m.get(piv, c);
                m.set(k, c, b);
                m.set(piv, c, a);
            }
            det = -det;
        }
        let pivot = m.get(k, k);
        det *= pivot;
        for r in (k + 1)..n {
            let factor = m.get(r, k) / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in k..n {
                let v = m.get(r, c) - factor * m.get(k, c);
                m.set(r, c, v);
            }
        }
    }
    Ok(det)
}

/// Solves `L y = b` then `L' x = y` for an SPD matrix factored as `L L'`.
pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Inverse of an SPD matrix from its Cholesky factor.
pub fn spd_inverse(l: &Mat) -> Mat {
    let n = l.rows();
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = cholesky_solve(l, &e);
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
        e[j] = 0.0;
    }
    // Symmetrize against round-off drift.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
            inv.set(i, j, v);
            inv.set(j, i, v);
        }
    }
    inv
}

/// Log-determinant of an SPD matrix from its Cholesky factor.
pub fn spd_log_det(l: &Mat) -> f64 {
    let mut s = 0.0;
    for i in 0..l.rows() {
        s += l.get(i, i).ln();
    }
    2.0 * s
}

/// Least-squares solution of `a x = y` via Householder QR.
///
/// Returns the coefficient vector, the inverse of the triangular factor
/// (so `(a'a)^-1 = r_inv r_inv'`), and the residual sum of squares.
pub fn qr_least_squares(a: &Mat, y: &[f64]) -> Result<QrFit, LinalgError> {
    let n = a.rows();
    let m = a.cols();
    assert_eq!(y.len(), n, "response length mismatch");
    assert!(n >= m, "more columns than rows");
    let mut r = a.clone();
    let mut qty: Vec<f64> = y.into();

    let mut col_scale = 0.0f64;
    for c in 0..m {
        let norm: f64 = (0..n).map(|i| r.get(i, c) * r.get(i, c)).sum::<f64>().sqrt();
        col_scale = col_scale.max(norm);
    }
    let tol = 1e-10 * col_scale.max(1.0);

    for k in 0..m {
        // Householder reflector for column k.
        let mut norm = 0.0;
        for i in k..n {
            norm += r.get(i, k) * r.get(i, k);
        }
        let norm = norm.sqrt();
        if norm <= tol {
            return Err(LinalgError::RankDeficient { column: k });
        }
        let alpha = if r.get(k, k) >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k];
        v[0] = r.get(k, k) - alpha;
        for i in (k + 1)..n {
            v[i - k] = r.get(i, k);
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        // Apply to remaining columns of R.
        for c in k..m {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i - k] * r.get(i, c);
            }
            let f = 2.0 * dot / vtv;
            for i in k..n {
                let val = r.get(i, c) - f * v[i - k];
                r.set(i, c, val);
            }
        }
        // Apply to the response.
        let mut dot = 0.0;
        for i in k..n {
            dot += v[i - k] * qty[i];
        }
        let f = 2.0 * dot / vtv;
        for i in k..n {
            qty[i] -= f * v[i - k];
        }
        r.set(k, k, alpha);
        for i in (k + 1)..n {
            r.set(i, k, 0.0);
        }
    }

    for k in 0..m {
        if r.get(k, k).abs() <= tol {
            return Err(LinalgError::RankDeficient { column: k });
        }
    }

    // Back substitution for the coefficients.
    let mut beta = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = qty[i];
        for j in (i + 1)..m {
            s -= r.get(i, j) * beta[j];
        }
        beta[i] = s / r.get(i, i);
    }

    // Inverse of the m x m triangular factor.
    let mut r_inv = Mat::zeros(m, m);
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        for i in (0..m).rev() {
            let mut s = e[i];
            for k in (i + 1)..m {
                s -= r.get(i, k) * r_inv.get(k, j);
            }
            r_inv.set(i, j, s / r.get(i, i));
        }
    }

    let rss: f64 = qty[m..].iter().map(|v| v * v).sum();
    Ok(QrFit { beta, r_inv, rss })
}

/// Output of [`qr_least_squares`].
pub struct QrFit {
    pub beta: Vec<f64>,
    pub r_inv: Mat,
    pub rss: f64,
}

/// Leading eigenpair of a symmetric matrix by power iteration.
pub fn power_iteration(a: &Mat, iters: usize) -> (f64, Vec<f64>) {
    let n = a.rows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut value = 0.0;
    for _ in 0..iters {
        let w = a.matvec(&v);
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        for i in 0..n {
            v[i] = w[i] / norm;
        }
        value = norm;
    }
    (value, v)
}

/// Helper used in error messages that need a compact matrix description.
pub fn shape_string(m: &Mat) -> String {
    format!("{}x{}", m.rows(), m.cols())
}
