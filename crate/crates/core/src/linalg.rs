//! Small dense solves. Every system here is at most `(2 + q) x (2 + q)`.

use nalgebra::DMatrix;

/// Inverse of a small square matrix together with its reciprocal 1-norm
/// condition number. `rcond` is zero when the LU factorization breaks down.
#[derive(Debug, Clone)]
pub(crate) struct Inverse {
    pub matrix: DMatrix<f64>,
    pub rcond: f64,
}

pub(crate) fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub(crate) fn invert(a: &DMatrix<f64>) -> Inverse {
    let n = a.nrows();
    match a.clone().lu().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => {
            let denom = norm1(a) * norm1(&inv);
            let rcond = if denom > 0.0 && denom.is_finite() { 1.0 / denom } else { 0.0 };
            Inverse { matrix: inv, rcond }
        }
        _ => Inverse { matrix: DMatrix::zeros(n, n), rcond: 0.0 },
    }
}
