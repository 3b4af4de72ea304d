//! Cyclic coordinate descent for the elastic net, Gaussian and logistic.
//!
//! Objective (per unit weight): `½ Σ vᵢ (zᵢ - b₀ - xᵢβ)² + λ (α‖β‖₁ + (1-α)/2 ‖β‖²)`.

use nalgebra::DMatrix;

use super::design::{sigmoid, Design};
use crate::error::{Error, Result};

pub const CD_TOL: f64 = 1e-7;
pub const MAX_SWEEPS: usize = 10_000;

#[inline]
fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Weighted least-squares coordinate descent, warm-started from `beta` / `b0`.
///
/// `cols` is column-major; `v` the observation weights of the quadratic.
/// With `b0 = None` no intercept is fitted. Returns the sweeps used.
#[allow(clippy::too_many_arguments)]
pub(crate) fn cd_solve(
    cols: &[Vec<f64>],
    v: &[f64],
    z: &[f64],
    lambda: f64,
    alpha: f64,
    beta: &mut [f64],
    mut b0: Option<&mut f64>,
    tol: f64,
) -> Result<usize> {
    let n = z.len();
    let p = cols.len();
    let xv: Vec<f64> = cols.iter().map(|c| c.iter().zip(v).map(|(x, w)| w * x * x).sum()).collect();
    let vsum: f64 = v.iter().sum();
    let mut r: Vec<f64> = (0..n)
        .map(|i| {
            let fit: f64 = (0..p).map(|j| cols[j][i] * beta[j]).sum();
            z[i] - fit - b0.as_deref().copied().unwrap_or(0.0)
        })
        .collect();
    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);

    let mut sweep = |active_only: bool, beta: &mut [f64], b0: &mut Option<&mut f64>| -> f64 {
        let mut max_delta = 0.0f64;
        if let Some(b) = b0.as_deref_mut() {
            if vsum > 0.0 {
                let d = r.iter().zip(v).map(|(ri, w)| w * ri).sum::<f64>() / vsum;
                if d != 0.0 {
                    *b += d;
                    r.iter_mut().for_each(|ri| *ri -= d);
                    max_delta = max_delta.max(d.abs());
                }
            }
        }
        for j in 0..p {
            if active_only && beta[j] == 0.0 {
                continue;
            }
            let denom = xv[j] + l2;
            if denom <= 0.0 {
                continue;
            }
            let col = &cols[j];
            let rho: f64 = col.iter().zip(&r).zip(v).map(|((x, ri), w)| w * x * ri).sum::<f64>() + xv[j] * beta[j];
            let next = soft_threshold(rho, l1) / denom;
            let d = next - beta[j];
            if d != 0.0 {
                for (ri, x) in r.iter_mut().zip(col) {
                    *ri -= d * x;
                }
                beta[j] = next;
                max_delta = max_delta.max(d.abs());
            }
        }
        max_delta
    };

    let mut sweeps = 0;
    loop {
        sweeps += 1;
        if sweep(false, beta, &mut b0) < tol {
            return Ok(sweeps);
        }
        loop {
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::NonConvergence { what: "coordinate descent".into(), iterations: MAX_SWEEPS });
            }
            if sweep(true, beta, &mut b0) < tol {
                break;
            }
        }
        if sweeps > MAX_SWEEPS {
            return Err(Error::NonConvergence { what: "coordinate descent".into(), iterations: MAX_SWEEPS });
        }
    }
}

/// Elastic net on a standardized design and centered target (no intercept),
/// minimizing `1/(2n) ‖y - Xβ‖² + λ (α‖β‖₁ + (1-α)/2 ‖β‖²)`.
pub fn elastic_net_solve(x: &DMatrix<f64>, y: &[f64], lambda: f64, alpha: f64) -> Result<Vec<f64>> {
    if lambda < 0.0 || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidHyper(format!("lambda {lambda}, alpha {alpha}")));
    }
    let (n, p) = x.shape();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.column(j).iter().copied().collect()).collect();
    let v = vec![1.0 / n as f64; n];
    let mut beta = vec![0.0; p];
    cd_solve(&cols, &v, y, lambda, alpha, &mut beta, None, CD_TOL)?;
    Ok(beta)
}

/// Penalized linear or logistic model on the original feature scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Internal standardization shared along a λ path.
pub(crate) struct Standardized {
    cols: Vec<Vec<f64>>,
    mean: Vec<f64>,
    sd: Vec<f64>,
    /// Observation weights normalized to sum 1.
    w: Vec<f64>,
}

impl Standardized {
    pub(crate) fn new(d: &Design, weights: &[f64]) -> Self {
        let (mean, sd) = d.moments();
        let cols = (0..d.p)
            .map(|j| {
                (0..d.n).map(|i| if sd[j] > 0.0 { (d.at(i, j) - mean[j]) / sd[j] } else { 0.0 }).collect()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        Standardized { cols, mean, sd, w: weights.iter().map(|w| w / total).collect() }
    }

    /// Smallest λ at which every coefficient is zero.
    pub(crate) fn lambda_max(&self, y: &[f64], alpha: f64) -> f64 {
        let ybar: f64 = y.iter().zip(&self.w).map(|(a, b)| a * b).sum();
        let g = self
            .cols
            .iter()
            .map(|c| c.iter().zip(y).zip(&self.w).map(|((x, yi), w)| w * x * (yi - ybar)).sum::<f64>().abs())
            .fold(0.0, f64::max);
        g / alpha.max(1e-3)
    }

    fn unscale(&self, b0: f64, beta: &[f64], warnings: Vec<String>) -> PenalizedFit {
        let coef: Vec<f64> =
            beta.iter().zip(&self.sd).map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 }).collect();
        let intercept = b0 - coef.iter().zip(&self.mean).map(|(c, m)| c * m).sum::<f64>();
        PenalizedFit { intercept, coef, warnings }
    }
}

/// Fits a decreasing λ sequence with warm starts; one fit per λ.
pub(crate) fn penalized_path(
    st: &Standardized,
    y: &[f64],
    logistic: bool,
    alpha: f64,
    lambdas: &[f64],
) -> Result<Vec<PenalizedFit>> {
    let n = y.len();
    let p = st.cols.len();
    let mut beta = vec![0.0; p];
    let ybar: f64 = y.iter().zip(&st.w).map(|(a, b)| a * b).sum();
    let mut b0 = if logistic { super::design::logit(ybar.clamp(1e-6, 1.0 - 1e-6)) } else { ybar };
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut warnings = Vec::new();
        if !logistic {
            cd_solve(&st.cols, &st.w, y, lambda, alpha, &mut beta, Some(&mut b0), CD_TOL)?;
        } else {
            let mut converged = false;
            for _ in 0..100 {
                let prev_b0 = b0;
                let prev = beta.clone();
                let mut v = vec![0.0; n];
                let mut z = vec![0.0; n];
                for i in 0..n {
                    let eta = b0 + (0..p).map(|j| st.cols[j][i] * beta[j]).sum::<f64>();
                    let mu = sigmoid(eta).clamp(1e-5, 1.0 - 1e-5);
                    let h = mu * (1.0 - mu);
                    v[i] = st.w[i] * h;
                    z[i] = eta + (y[i] - mu) / h;
                }
                cd_solve(&st.cols, &v, &z, lambda, alpha, &mut beta, Some(&mut b0), CD_TOL)?;
                let change = prev.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold((prev_b0 - b0).abs(), f64::max);
                if change < 1e-6 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                warnings.push(format!("penalized logistic fit at lambda {lambda:.3e} did not converge"));
            }
        }
        out.push(st.unscale(b0, &beta, warnings));
    }
    Ok(out)
}

/// `count` log-spaced values from `hi` down to `lo`.
pub fn log_grid(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::least_squares;
    use nalgebra::DVector;
    use rand::Rng as _;

    /// Orthogonal, centered columns each with `Σx² = n` (standardized and orthonormal up to √n).
    fn orthonormal_design(n: usize, p: usize) -> DMatrix<f64> {
        // Columns of a Hadamard-like ±1 pattern are orthogonal and zero-mean.
        DMatrix::from_fn(n, p, |i, j| if (i >> (j + 1)) % 2 == 0 { 1.0 } else { -1.0 })
    }

    fn target(n: usize) -> Vec<f64> {
        let mut r = crate::rng::rng_from_seed(17);
        let raw: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin() * 2.0 + r.random_range(-1.0..1.0)).collect();
        let m = raw.iter().sum::<f64>() / n as f64;
        raw.iter().map(|v| v - m).collect()
    }

    fn ols_projection(x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
        let n = x.nrows() as f64;
        (x.transpose() * DVector::from_column_slice(y)).iter().map(|v| v / n).collect()
    }

    #[test]
    fn lasso_soft_thresholds_ols() {
        let (n, p) = (64, 4);
        let x = orthonormal_design(n, p);
        let y = target(n);
        let b = ols_projection(&x, &y);
        for lambda in [0.01, 0.1, 0.3, 2.0] {
            let beta = elastic_net_solve(&x, &y, lambda, 1.0).unwrap();
            for j in 0..p {
                let oracle = b[j].signum() * (b[j].abs() - lambda).max(0.0);
                assert!((beta[j] - oracle).abs() < 1e-6, "lambda {lambda} j {j}");
            }
        }
    }

    #[test]
    fn ridge_shrinks_ols() {
        let (n, p) = (64, 4);
        let x = orthonormal_design(n, p);
        let y = target(n);
        let b = ols_projection(&x, &y);
        for lambda in [0.0, 0.5, 3.0] {
            let beta = elastic_net_solve(&x, &y, lambda, 0.0).unwrap();
            for j in 0..p {
                assert!((beta[j] - b[j] / (1.0 + lambda)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_penalty_is_ols() {
        let mut r = crate::rng::rng_from_seed(3);
        let (n, p) = (100, 3);
        let mut x = DMatrix::from_fn(n, p, |_, _| r.random_range(-1.0f64..1.0));
        for j in 0..p {
            let m = x.column(j).mean();
            let s = x.column(j).variance().sqrt();
            x.column_mut(j).apply(|v| *v = (*v - m) / s);
        }
        let y: Vec<f64> = (0..n).map(|i| x[(i, 0)] - 0.5 * x[(i, 2)] + r.random_range(-0.3..0.3)).collect();
        let m = y.iter().sum::<f64>() / n as f64;
        let y: Vec<f64> = y.iter().map(|v| v - m).collect();
        let beta = elastic_net_solve(&x, &y, 0.0, 0.5).unwrap();
        let (ols, _) = least_squares(&x, &DVector::from_column_slice(&y)).unwrap();
        for j in 0..p {
            assert!((beta[j] - ols[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn lambda_max_zeroes_everything() {
        let mut r = crate::rng::rng_from_seed(5);
        let d = Design::from_rows((0..300).map(|_| r.random_range(-1.0..1.0)).collect(), 100, 3);
        let y: Vec<f64> = (0..100).map(|i| d.at(i, 0) * 2.0 + d.at(i, 1)).collect();
        let st = Standardized::new(&d, &vec![1.0; 100]);
        let lmax = st.lambda_max(&y, 1.0);
        let fits = penalized_path(&st, &y, false, 1.0, &[lmax * 1.0001, lmax * 0.9]).unwrap();
        assert!(fits[0].coef.iter().all(|&c| c == 0.0));
        assert!(fits[1].coef.iter().any(|&c| c != 0.0));
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(100.0, 1e-4, 25);
        assert_eq!(g.len(), 25);
        assert!((g[0] - 100.0).abs() < 1e-9 && (g[24] - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn logistic_lasso_satisfies_kkt() {
        let mut r = crate::rng::rng_from_seed(8);
        let (n, p) = (2000, 6);
        let x: Vec<f64> = (0..n * p).map(|_| r.random_range(-2.0..2.0)).collect();
        let d = Design::from_rows(x, n, p);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta = 1.5 * d.at(i, 0) - 1.0 * d.at(i, 1) + 0.3 * d.at(i, 2);
                f64::from(u8::from(r.random::<f64>() < sigmoid(eta)))
            })
            .collect();
        let st = Standardized::new(&d, &vec![1.0; n]);
        for lambda in [0.003, 0.03] {
            let fit = penalized_path(&st, &y, true, 1.0, &[lambda]).unwrap().remove(0);
            let resid: Vec<f64> = (0..n)
                .map(|i| {
                    let eta = fit.intercept + (0..p).map(|j| fit.coef[j] * d.at(i, j)).sum::<f64>();
                    y[i] - sigmoid(eta)
                })
                .collect();
            assert!(resid.iter().sum::<f64>().abs() / (n as f64) < 1e-5);
            for j in 0..p {
                // Gradient with respect to the standardized coefficient.
                let g = (0..n).map(|i| st.cols[j][i] * resid[i]).sum::<f64>() / n as f64;
                if fit.coef[j] != 0.0 {
                    assert!((g - lambda * fit.coef[j].signum()).abs() < 1e-5, "{lambda} {j}: {g}");
                } else {
                    assert!(g.abs() <= lambda + 1e-5);
                }
            }
        }
    }
}
