use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub rmse: f64,
    pub mae: f64,
    /// Squared Pearson correlation; `None` when either side has zero variance.
    pub r2: Option<f64>,
    pub undefined: Vec<String>,
}

pub fn regression_report(preds: &[f64], trues: &[f64]) -> Result<RegressionReport> {
    if preds.len() != trues.len() || preds.len() < 2 {
        return Err(Error::TooFewRows(format!("{} predictions vs {} truths", preds.len(), trues.len())));
    }
    let n = preds.len() as f64;
    let rmse = (preds.iter().zip(trues).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n).sqrt();
    let mae = preds.iter().zip(trues).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
    let (mp, mt) = (preds.iter().sum::<f64>() / n, trues.iter().sum::<f64>() / n);
    let sxy: f64 = preds.iter().zip(trues).map(|(p, t)| (p - mp) * (t - mt)).sum();
    let sxx: f64 = preds.iter().map(|p| (p - mp).powi(2)).sum();
    let syy: f64 = trues.iter().map(|t| (t - mt).powi(2)).sum();
    let mut undefined = Vec::new();
    let r2 = if sxx > 0.0 && syy > 0.0 {
        Some((sxy * sxy / (sxx * syy)).min(1.0))
    } else {
        undefined.push("r2".to_string());
        None
    };
    Ok(RegressionReport { rmse, mae, r2, undefined })
}

fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `q` pairs `(predicted quantile, true quantile)` at evenly spaced
/// probabilities from 0 to 1, linearly interpolated.
pub fn qq_points(preds: &[f64], trues: &[f64], q: usize) -> Vec<(f64, f64)> {
    if preds.is_empty() || trues.is_empty() || q == 0 {
        return Vec::new();
    }
    let mut a = preds.to_vec();
    let mut b = trues.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    (0..q)
        .map(|k| {
            let prob = if q > 1 { k as f64 / (q - 1) as f64 } else { 0.5 };
            (quantile(&a, prob), quantile(&b, prob))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng as _;

    #[test]
    fn hand_example() {
        let r = regression_report(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r.rmse - 0.5774).abs() < 1e-4);
        assert!((r.mae - 0.3333).abs() < 1e-4);
        assert!((r.r2.unwrap() - 0.9643).abs() < 1e-4);
    }

    #[test]
    fn perfect_and_constant() {
        let r = regression_report(&[1.0, 5.0, 2.0], &[1.0, 5.0, 2.0]).unwrap();
        assert_eq!((r.rmse, r.mae, r.r2), (0.0, 0.0, Some(1.0)));
        let c = regression_report(&[1.0, 2.0], &[3.0, 3.0]).unwrap();
        assert!(c.r2.is_none() && c.undefined == vec!["r2".to_string()]);
    }

    #[test]
    fn qq_shift_and_count() {
        let t: Vec<f64> = (0..37).map(|i| (i as f64 * 1.7).sin() * 4.0).collect();
        let p: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
        let pts = qq_points(&p, &t, 100);
        assert_eq!(pts.len(), 100);
        for w in pts.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
        assert!(pts.iter().all(|(a, b)| (a - b - 1.0).abs() < 1e-12));
    }

    #[test]
    fn qq_same_distribution_near_diagonal() {
        let mut r = crate::rng::rng_from_seed(12);
        let a: Vec<f64> = (0..20_000).map(|_| r.random_range(0.0..10.0)).collect();
        let b: Vec<f64> = (0..20_000).map(|_| r.random_range(0.0..10.0)).collect();
        assert!(qq_points(&a, &b, 100).iter().all(|(x, y)| (x - y).abs() < 0.25));
    }

    proptest! {
        #[test]
        fn mae_at_most_rmse(v in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..50)) {
            let (p, t): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let r = regression_report(&p, &t).unwrap();
            prop_assert!(r.mae <= r.rmse + 1e-12);
        }
    }
}
