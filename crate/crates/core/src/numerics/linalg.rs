//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// `(-h)^{-1}` when `-h` is positive definite.
pub fn inv_neg(h: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let neg = -h;
    neg.cholesky().map(|c| c.inverse())
}

/// Solve `(-h) d = g` when `-h` is positive definite.
pub fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let neg = -h;
    let chol = neg.cholesky()?;
    let d = chol.solve(g);
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Numerical rank of a symmetric matrix (eigenvalues above `rel_tol` times
/// the largest magnitude).
pub fn symmetric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 {
        return 0;
    }
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max == 0.0 {
        return 0;
    }
    eig.eigenvalues
        .iter()
        .filter(|v| v.abs() > rel_tol * max)
        .count()
}

pub fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major flattening used by serialized artifacts.
pub fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn from_row_major(n: usize, data: &[f64]) -> Option<DMatrix<f64>> {
    (data.len() == n * n).then(|| DMatrix::from_row_slice(n, n, data))
}
