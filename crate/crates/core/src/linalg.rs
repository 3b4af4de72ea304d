//! Thin wrappers over nalgebra factorizations used by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ridge added to a singular system before the retry.
pub const JITTER: f64 = 1e-8;

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky.
///
/// On failure retries once with `JITTER * I` added; the flag reports whether
/// the jitter was needed.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok((ch.solve(b), false));
    }
    let scale = (0..a.nrows()).map(|i| a[(i, i)].abs()).fold(1.0, f64::max);
    let jittered = a + DMatrix::<f64>::identity(a.nrows(), a.ncols()) * (JITTER * scale);
    match jittered.cholesky() {
        Some(ch) => Ok((ch.solve(b), true)),
        None => Err(Error::SingularSystem(format!("{}x{} system not positive definite after jitter", a.nrows(), a.ncols()))),
    }
}

/// Least squares `min ||x b - y||` via Householder QR.
///
/// Rank-deficient designs fall back to normal equations with `JITTER` ridge;
/// the flag reports the fallback.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let (n, p) = x.shape();
    if n >= p {
        let qr = x.clone().qr();
        let r = qr.r();
        let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let rank_ok = (0..p).all(|i| r[(i, i)].abs() > 1e-10 * max_diag.max(1e-300));
        if rank_ok {
            let qty = qr.q().transpose() * y;
            if let Some(b) = r.solve_upper_triangular(&qty) {
                return Ok((b, false));
            }
        }
    }
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let scale = (0..p).map(|i| xtx[(i, i)].abs()).fold(1.0, f64::max);
    let a = xtx + DMatrix::<f64>::identity(p, p) * (JITTER * scale);
    let (b, _) = solve_spd(&a, &xty)?;
    Ok((b, true))
}

/// Row-major `n x p` buffer to a matrix, optionally prefixed by a ones column.
pub fn to_matrix(rows: &[f64], n: usize, p: usize, intercept: bool) -> DMatrix<f64> {
    let off = usize::from(intercept);
    DMatrix::from_fn(n, p + off, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            rows[i * p + j - off]
        }
    })
}
