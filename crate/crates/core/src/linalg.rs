//! Dense linear algebra helpers shared by the solvers.
//!
//! Code matrices in the dictionary learning problem are mostly zeros, so the
//! products involving them go through a row-sparse path when the fill ratio is
//! low. Both paths are deterministic for a given input.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::IpadError;

pub type Mat = Array2<f64>;

/// Fill ratio below which products switch to the row-sparse kernels.
const SPARSE_FILL: f64 = 0.3;

/// Frobenius norm.
pub fn frob(a: &ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Frobenius norm of `a - b`.
pub fn frob_diff(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn all_finite(a: &ArrayView2<f64>) -> bool {
    a.iter().all(|v| v.is_finite())
}

pub fn nnz(a: &ArrayView2<f64>) -> usize {
    a.iter().filter(|v| **v != 0.0).count()
}

/// Result of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest singular value of `a` by power iteration on the smaller Gram
/// matrix, started from a fixed non-constant positive vector.
///
/// Stops once the relative change of the estimate drops below `tol / 100`;
/// after 10 000 sweeps the best estimate is returned with `converged = false`.
pub fn spectral_norm(a: &ArrayView2<f64>, tol: f64) -> SpectralEstimate {
    const MAX_SWEEPS: usize = 10_000;
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return SpectralEstimate { value: 0.0, iterations: 0, converged: true };
    }
    // Iterate in the smaller space: x lives in R^k with k = min(rows, cols).
    let wide = rows < cols;
    let k = if wide { rows } else { cols };
    // All-ones plus a golden-ratio sequence: a constant start vector lies in
    // an invariant subspace of structured matrices such as DCT frames.
    let mut x = Array1::from_shape_fn(k, |i| 1.0 + (i as f64 * 0.618_033_988_749_895).fract());
    x /= x.dot(&x).sqrt();
    let mut sigma = 0.0_f64;
    for sweep in 1..=MAX_SWEEPS {
        let (image, back) = if wide {
            let y = a.t().dot(&x);
            let z = a.dot(&y);
            (y, z)
        } else {
            let y = a.dot(&x);
            let z = a.t().dot(&y);
            (y, z)
        };
        let estimate = image.dot(&image).sqrt();
        let back_norm = back.dot(&back).sqrt();
        if back_norm == 0.0 || !back_norm.is_finite() {
            return SpectralEstimate { value: estimate, iterations: sweep, converged: true };
        }
        let change = (estimate - sigma).abs();
        sigma = estimate;
        x = back / back_norm;
        if sweep > 1 && change <= 1e-2 * tol * sigma {
            return SpectralEstimate { value: sigma, iterations: sweep, converged: true };
        }
    }
    SpectralEstimate { value: sigma, iterations: MAX_SWEEPS, converged: false }
}

/// Row-compressed copy of a mostly-zero matrix.
#[derive(Debug, Clone)]
pub struct SparseRows {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
    cols: usize,
}

impl SparseRows {
    pub fn from_dense(a: &ArrayView2<f64>) -> Self {
        let mut ptr = Vec::with_capacity(a.nrows() + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        for row in a.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    idx.push(j);
                    val.push(v);
                }
            }
            ptr.push(idx.len());
        }
        Self { ptr, idx, val, cols: a.ncols() }
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.ptr[r]..self.ptr[r + 1];
        self.idx[span.clone()].iter().copied().zip(self.val[span].iter().copied())
    }

    pub fn rows(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// Whether the sparse kernels beat dense ones at this fill.
    pub fn worth_it(&self) -> bool {
        let total = self.rows() * self.cols;
        total > 0 && (self.nnz() as f64) < SPARSE_FILL * total as f64
    }
}

/// `aᵀ a`.
pub fn gram(a: &ArrayView2<f64>) -> Mat {
    gram_of(a, &SparseRows::from_dense(a))
}

/// `aᵀ a` given the compressed copy `s` of `a`.
pub fn gram_of(a: &ArrayView2<f64>, s: &SparseRows) -> Mat {
    if !s.worth_it() {
        return a.t().dot(a);
    }
    let mut out = Mat::zeros((s.cols, s.cols));
    for r in 0..s.rows() {
        for (i, vi) in s.row(r) {
            let mut out_row = out.row_mut(i);
            for (j, vj) in s.row(r) {
                out_row[j] += vi * vj;
            }
        }
    }
    out
}

/// `a · b` where `a` is typically a sparse code matrix.
pub fn sparse_left_dot(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Mat {
    sparse_left_dot_of(a, &SparseRows::from_dense(a), b)
}

pub fn sparse_left_dot_of(a: &ArrayView2<f64>, s: &SparseRows, b: &ArrayView2<f64>) -> Mat {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    if !s.worth_it() {
        return a.dot(b);
    }
    let mut out = Mat::zeros((a.nrows(), b.ncols()));
    for r in 0..s.rows() {
        let mut out_row = out.row_mut(r);
        for (j, v) in s.row(r) {
            out_row.scaled_add(v, &b.row(j));
        }
    }
    out
}

/// `b · aᵀ` where `a` is typically a sparse code matrix (so `aᵀ` is sparse by column).
pub fn dot_sparse_t(b: &ArrayView2<f64>, a: &ArrayView2<f64>) -> Mat {
    dot_sparse_t_of(b, a, &SparseRows::from_dense(a))
}

pub fn dot_sparse_t_of(b: &ArrayView2<f64>, a: &ArrayView2<f64>, s: &SparseRows) -> Mat {
    assert_eq!(b.ncols(), a.ncols(), "inner dimensions differ");
    if !s.worth_it() {
        return b.dot(&a.t());
    }
    let mut out = Mat::zeros((b.nrows(), a.nrows()));
    for r in 0..s.rows() {
        let mut col = out.column_mut(r);
        for (j, v) in s.row(r) {
            col.scaled_add(v, &b.column(j));
        }
    }
    out
}

/// `b · a` where `a` is sparse and `b` is dense (`b` has as many columns as `a` rows).
pub fn dot_sparse(b: &ArrayView2<f64>, a: &ArrayView2<f64>) -> Mat {
    dot_sparse_of(b, a, &SparseRows::from_dense(a))
}

pub fn dot_sparse_of(b: &ArrayView2<f64>, a: &ArrayView2<f64>, s: &SparseRows) -> Mat {
    assert_eq!(b.ncols(), a.nrows(), "inner dimensions differ");
    if !s.worth_it() {
        return b.dot(a);
    }
    let mut out = Mat::zeros((b.nrows(), a.ncols()));
    for r in 0..s.rows() {
        let b_col = b.column(r);
        for (j, v) in s.row(r) {
            out.column_mut(j).scaled_add(v, &b_col);
        }
    }
    out
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Mat,
}

impl Cholesky {
    pub fn factor(a: &ArrayView2<f64>) -> Result<Self, IpadError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(IpadError::Shape(format!("cholesky of a {}x{} matrix", n, a.ncols())));
        }
        let mut l = Mat::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]];
            for k in 0..j {
                diag -= l[[j, k]] * l[[j, k]];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(IpadError::Factorization(format!(
                    "pivot {j} is {diag:e}; matrix is not positive definite"
                )));
            }
            let d = diag.sqrt();
            l[[j, j]] = d;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `x · A = b` row by row (A symmetric, so each row solves `A xᵀ = bᵀ`).
    pub fn solve_rows(&self, b: &ArrayView2<f64>) -> Mat {
        assert_eq!(b.ncols(), self.dim());
        let n = self.dim();
        let mut out = b.to_owned();
        for mut row in out.axis_iter_mut(Axis(0)) {
            // forward: L y = b
            for i in 0..n {
                let mut s = row[i];
                for k in 0..i {
                    s -= self.l[[i, k]] * row[k];
                }
                row[i] = s / self.l[[i, i]];
            }
            // backward: Lᵀ x = y
            for i in (0..n).rev() {
                let mut s = row[i];
                for k in (i + 1)..n {
                    s -= self.l[[k, i]] * row[k];
                }
                row[i] = s / self.l[[i, i]];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn spectral_norm_of_identity_and_diagonal() {
        let eye = Mat::eye(5);
        let est = spectral_norm(&eye.view(), 1e-10);
        assert!((est.value - 1.0).abs() < 1e-12);
        let d = Mat::from_diag(&array![1.0, 2.0, 3.0]);
        let est = spectral_norm(&d.view(), 1e-10);
        assert!(est.converged);
        assert!((est.value - 3.0).abs() < 3e-10, "{}", est.value);
    }

    #[test]
    fn spectral_norm_of_rectangular_matrix() {
        // singular values of [[3, 0], [0, 4], [0, 0]] are 4 and 3
        let a = array![[3.0, 0.0], [0.0, 4.0], [0.0, 0.0]];
        assert!((spectral_norm(&a.view(), 1e-10).value - 4.0).abs() < 1e-8);
        assert!((spectral_norm(&a.t(), 1e-10).value - 4.0).abs() < 1e-8);
    }

    #[test]
    fn sparse_and_dense_products_agree() {
        let w = array![[0.0, 1.5, 0.0, 0.0], [0.0, 0.0, 0.0, -2.0], [0.5, 0.0, 0.0, 0.0]];
        let d = array![[1.0, 2.0, 3.0, 4.0], [0.5, -1.0, 0.0, 2.0]];
        let g = d.t().dot(&d);
        assert_eq!(gram(&w.view()), w.t().dot(&w));
        assert_eq!(sparse_left_dot(&w.view(), &g.view()), w.dot(&g));
        assert_eq!(dot_sparse_t(&d.view(), &w.view()), d.dot(&w.t()));
        let i = array![[1.0, 0.0, 2.0], [3.0, -1.0, 1.0]];
        assert_eq!(dot_sparse(&i.view(), &w.view()), i.dot(&w));
    }

    #[test]
    fn cholesky_solves_rows() {
        let a = array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let b = array![[1.0, 2.0, 3.0], [-1.0, 0.0, 4.0]];
        let x = Cholesky::factor(&a.view()).unwrap().solve_rows(&b.view());
        let back = x.dot(&a);
        for (u, v) in back.iter().zip(b.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(Cholesky::factor(&a.view()), Err(IpadError::Factorization(_))));
    }
}
