//! Newton / iteratively reweighted least squares for (ridge) logistic regression.

use nalgebra::{DMatrix, DVector};

use super::design::{sigmoid, softplus};
use crate::error::Result;
use crate::linalg::solve_spd;

#[derive(Debug, Clone)]
pub struct IrlsOptions {
    pub ridge_penalty: f64,
    pub weights: Option<Vec<f64>>,
    /// Fixed addition to the linear predictor (slope-pinned refits).
    pub offset: Option<Vec<f64>>,
    /// Columns exempt from the ridge penalty.
    pub unpenalized: Vec<usize>,
    pub max_iter: usize,
    /// Relative deviance change that counts as converged.
    pub tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions { ridge_penalty: 0.0, weights: None, offset: None, unpenalized: vec![0], max_iter: 100, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsFit {
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Infinity norm of the penalized log-likelihood gradient at `coef`.
    pub gradient_norm: f64,
    pub deviance: f64,
    pub warnings: Vec<String>,
}

/// Logistic maximum likelihood with an optional ridge penalty
/// `(λ/2)·Σ βⱼ²`; column 0 is treated as the intercept and left unpenalized.
pub fn irls_logistic(x: &DMatrix<f64>, y: &[f64], ridge_penalty: f64, weights: Option<&[f64]>) -> Result<IrlsFit> {
    let opts = IrlsOptions { ridge_penalty, weights: weights.map(<[f64]>::to_vec), ..IrlsOptions::default() };
    irls_logistic_with(x, y, &opts)
}

pub fn irls_logistic_with(x: &DMatrix<f64>, y: &[f64], opts: &IrlsOptions) -> Result<IrlsFit> {
    let (n, p) = x.shape();
    let w = |i: usize| opts.weights.as_ref().map_or(1.0, |w| w[i]);
    let off = |i: usize| opts.offset.as_ref().map_or(0.0, |o| o[i]);
    let pen: Vec<f64> =
        (0..p).map(|j| if opts.unpenalized.contains(&j) { 0.0 } else { opts.ridge_penalty }).collect();

    // Penalized deviance: -2 loglik + λ Σ βⱼ².
    let objective = |beta: &DVector<f64>| -> f64 {
        let eta = x * beta;
        let mut dev = 0.0;
        for i in 0..n {
            let e = eta[i] + off(i);
            dev += 2.0 * w(i) * (softplus(e) - y[i] * e);
        }
        dev + (0..p).map(|j| pen[j] * beta[j] * beta[j]).sum::<f64>()
    };
    let gradient = |beta: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let eta = x * beta;
        let mu: DVector<f64> = DVector::from_fn(n, |i, _| sigmoid(eta[i] + off(i)));
        let resid = DVector::from_fn(n, |i, _| w(i) * (y[i] - mu[i]));
        let mut g = x.transpose() * resid;
        for j in 0..p {
            g[j] -= pen[j] * beta[j];
        }
        (g, mu)
    };

    let mut beta = DVector::<f64>::zeros(p);
    let mut dev = objective(&beta);
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut jittered = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let (g, mu) = gradient(&beta);
        let mut sx = x.clone();
        for i in 0..n {
            let s = (w(i) * mu[i] * (1.0 - mu[i])).sqrt();
            sx.row_mut(i).scale_mut(s);
        }
        let mut h = sx.transpose() * &sx;
        for j in 0..p {
            h[(j, j)] += pen[j];
        }
        let (step, jit) = solve_spd(&h, &g)?;
        jittered |= jit;
        let mut t = 1.0;
        let mut next = &beta + &step;
        let mut next_dev = objective(&next);
        let mut halvings = 0;
        while !(next_dev <= dev + 1e-12 * dev.abs()) && halvings < 30 {
            t *= 0.5;
            next = &beta + &step * t;
            next_dev = objective(&next);
            halvings += 1;
        }
        if halvings == 30 {
            break;
        }
        let change = (dev - next_dev).abs() / (next_dev.abs() + 0.1);
        beta = next;
        dev = next_dev;
        let grad_inf = gradient(&beta).0.amax();
        if (change < opts.tol && grad_inf < 1e-6) || grad_inf < 1e-10 {
            converged = true;
            break;
        }
    }
    if jittered {
        warnings.push("singular Hessian regularized with jitter".to_string());
    }
    if !converged {
        warnings.push(format!(
            "logistic fit did not converge in {iterations} iterations (possible complete separation)"
        ));
    }
    let (g, mu) = gradient(&beta);
    if mu.iter().any(|&m| !(m > 1e-10 && m < 1.0 - 1e-10)) {
        warnings.push("fitted probabilities numerically 0 or 1 (possible complete separation)".to_string());
    }
    let gradient_norm = g.amax();
    Ok(IrlsFit { coef: beta.iter().copied().collect(), iterations, converged, gradient_norm, deviance: dev, warnings })
}
