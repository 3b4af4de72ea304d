use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::design::{logit, sigmoid};
use crate::models::{irls_logistic_with, IrlsOptions};

const CLIP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecalibrationMethod {
    InterceptUpdate,
    Platt,
    Isotonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recalibrator {
    /// `logit p' = logit p + c`.
    InterceptUpdate { c: f64 },
    /// `logit p' = a + b · logit p`.
    Platt { a: f64, b: f64 },
    /// Step function: `levels[k]` from `breakpoints[k]` up to the next breakpoint.
    Isotonic { breakpoints: Vec<f64>, levels: Vec<f64> },
}

/// Weighted pool-adjacent-violators: the non-decreasing sequence closest to
/// `values` in weighted least squares.
pub fn pava(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // Blocks of (weighted mean, weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, l1 + l2));
        }
    }
    blocks.into_iter().flat_map(|(m, _, l)| std::iter::repeat_n(m, l)).collect()
}

fn logits(probs: &[f64]) -> Vec<f64> {
    probs.iter().map(|&p| logit(p.clamp(CLIP, 1.0 - CLIP))).collect()
}

pub fn fit_recalibrator(probs: &[f64], labels: &[u8], method: RecalibrationMethod) -> Result<Recalibrator> {
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClass);
    }
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let n = probs.len();
    match method {
        RecalibrationMethod::InterceptUpdate => {
            let opts = IrlsOptions { offset: Some(logits(probs)), ..IrlsOptions::default() };
            let fit = irls_logistic_with(&DMatrix::from_element(n, 1, 1.0), &y, &opts)?;
            Ok(Recalibrator::InterceptUpdate { c: fit.coef[0] })
        }
        RecalibrationMethod::Platt => {
            let lp = logits(probs);
            let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { lp[i] });
            let fit = irls_logistic_with(&x, &y, &IrlsOptions::default())?;
            Ok(Recalibrator::Platt { a: fit.coef[0], b: fit.coef[1] })
        }
        RecalibrationMethod::Isotonic => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
            // Equal scores form one weighted point so the step function is well defined.
            let mut xs: Vec<f64> = Vec::new();
            let mut means: Vec<f64> = Vec::new();
            let mut weights: Vec<f64> = Vec::new();
            for &i in &order {
                if xs.last() == Some(&probs[i]) {
                    let k = xs.len() - 1;
                    means[k] = (means[k] * weights[k] + y[i]) / (weights[k] + 1.0);
                    weights[k] += 1.0;
                } else {
                    xs.push(probs[i]);
                    means.push(y[i]);
                    weights.push(1.0);
                }
            }
            let fitted = pava(&means, &weights);
            let mut breakpoints = Vec::new();
            let mut levels: Vec<f64> = Vec::new();
            for (x, v) in xs.into_iter().zip(fitted) {
                if levels.last() != Some(&v) {
                    breakpoints.push(x);
                    levels.push(v);
                }
            }
            Ok(Recalibrator::Isotonic { breakpoints, levels })
        }
    }
}

pub fn apply_recalibrator(r: &Recalibrator, probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .map(|&p| {
            let out = match r {
                Recalibrator::InterceptUpdate { c } => sigmoid(logit(p.clamp(CLIP, 1.0 - CLIP)) + c),
                Recalibrator::Platt { a, b } => sigmoid(a + b * logit(p.clamp(CLIP, 1.0 - CLIP))),
                Recalibrator::Isotonic { breakpoints, levels } => {
                    let k = breakpoints.partition_point(|&b| b <= p);
                    levels[k.saturating_sub(1)]
                }
            };
            out.clamp(0.0, 1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::auc;
    use rand::Rng as _;

    /// Minimum-SSE monotone fit by enumerating every contiguous partition.
    fn exhaustive(values: &[f64]) -> Vec<f64> {
        let n = values.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << (n - 1)) {
            let mut fit = Vec::with_capacity(n);
            let mut start = 0;
            for i in 0..n {
                if i == n - 1 || mask & (1 << i) != 0 {
                    let block = &values[start..=i];
                    let m = block.iter().sum::<f64>() / block.len() as f64;
                    fit.extend(std::iter::repeat_n(m, block.len()));
                    start = i + 1;
                }
            }
            if fit.windows(2).any(|w| w[0] > w[1] + 1e-12) {
                continue;
            }
            let sse: f64 = fit.iter().zip(values).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|b| sse < b.0 - 1e-12) {
                best = Some((sse, fit));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn pava_hand_example() {
        assert_eq!(pava(&[1.0, 3.0, 2.0], &[1.0; 3]), vec![1.0, 2.5, 2.5]);
    }

    #[test]
    fn pava_matches_exhaustive_search() {
        let mut r = crate::rng::rng_from_seed(6);
        for _ in 0..500 {
            let n = r.random_range(1..=8);
            let v: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..6))).collect();
            let fit = pava(&v, &vec![1.0; n]);
            let oracle = exhaustive(&v);
            for (a, b) in fit.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "{v:?}: {fit:?} vs {oracle:?}");
            }
            assert!(fit.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    fn simulate(n: usize, shift: f64, seed: u64) -> (Vec<f64>, Vec<u8>) {
        let mut r = crate::rng::rng_from_seed(seed);
        let probs: Vec<f64> = (0..n).map(|_| sigmoid(r.random_range(-2.5..2.5))).collect();
        let labels = probs.iter().map(|&p| u8::from(r.random::<f64>() < sigmoid(logit(p) + shift))).collect();
        (probs, labels)
    }

    #[test]
    fn intercept_update_recovers_shift() {
        let (p, y) = simulate(20_000, 0.7, 3);
        let Recalibrator::InterceptUpdate { c } = fit_recalibrator(&p, &y, RecalibrationMethod::InterceptUpdate).unwrap()
        else {
            panic!()
        };
        assert!((c - 0.7).abs() < 0.05, "{c}");
    }

    #[test]
    fn platt_on_calibrated_is_identity_and_keeps_auc() {
        let (p, y) = simulate(20_000, 0.0, 4);
        let r = fit_recalibrator(&p, &y, RecalibrationMethod::Platt).unwrap();
        let Recalibrator::Platt { a, b } = r else { panic!() };
        assert!(a.abs() < 0.05 && (b - 1.0).abs() < 0.05, "{a} {b}");
        let q = apply_recalibrator(&r, &p);
        assert!((auc(&p, &y).unwrap() - auc(&q, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn isotonic_monotone_and_flat_outside() {
        let (p, y) = simulate(2_000, 0.3, 5);
        let r = fit_recalibrator(&p, &y, RecalibrationMethod::Isotonic).unwrap();
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let out = apply_recalibrator(&r, &grid);
        assert!(out.windows(2).all(|w| w[0] <= w[1]));
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
        let Recalibrator::Isotonic { levels, .. } = &r else { panic!() };
        assert_eq!(out[0], levels[0]);
        assert_eq!(out[100], *levels.last().unwrap());
    }
}
