use serde::{Deserialize, Serialize};

use super::design::Design;
use crate::data::FeatureKind;

const VAR_FLOOR: f64 = 1e-9;
const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "density", rename_all = "snake_case")]
pub enum NbFeature {
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    /// Gaussian kernel density over sorted class samples.
    Kernel { samples: [Vec<f64>; 2], weights: [Vec<f64>; 2], bandwidth: [f64; 2] },
    /// Laplace-smoothed level probabilities.
    Discrete { levels: Vec<f64>, probs: [Vec<f64>; 2], unseen: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub priors: [f64; 2],
    pub features: Vec<NbFeature>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbParams {
    pub fl: f64,
    pub usekernel: bool,
    pub adjust: f64,
}

fn weighted_quantile(sorted: &[(f64, f64)], q: f64) -> f64 {
    let total: f64 = sorted.iter().map(|s| s.1).sum();
    let target = q * total;
    let mut acc = 0.0;
    for &(v, w) in sorted {
        acc += w;
        if acc >= target {
            return v;
        }
    }
    sorted.last().map_or(0.0, |s| s.0)
}

/// Silverman's rule `0.9 · min(sd, IQR/1.34) · n^(-1/5)`, falling back to
/// whichever spread is positive.
pub fn silverman_bandwidth(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values.iter().zip(weights).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / (total - 1.0).max(1.0);
    let sd = var.sqrt();
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let iqr = weighted_quantile(&pairs, 0.75) - weighted_quantile(&pairs, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => mean.abs().max(1.0),
    };
    0.9 * spread * total.powf(-0.2)
}

pub fn fit_naive_bayes(d: &Design, y: &[f64], w: &[f64], params: &NbParams) -> NaiveBayes {
    let mut cw = [0.0; 2];
    for i in 0..d.n {
        cw[y[i] as usize] += w[i];
    }
    let total = cw[0] + cw[1];
    let priors = [cw[0] / total, cw[1] / total];
    let features = (0..d.p)
        .map(|j| match &d.kinds[j] {
            FeatureKind::Continuous if params.usekernel => {
                let mut samples = [Vec::new(), Vec::new()];
                let mut weights = [Vec::new(), Vec::new()];
                let mut pairs: Vec<(f64, f64, usize)> =
                    (0..d.n).filter(|&i| w[i] > 0.0).map(|i| (d.at(i, j), w[i], y[i] as usize)).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                for (v, wi, c) in pairs {
                    samples[c].push(v);
                    weights[c].push(wi);
                }
                let bandwidth = [0, 1].map(|c| {
                    (silverman_bandwidth(&samples[c], &weights[c]) * params.adjust).max(VAR_FLOOR.sqrt())
                });
                NbFeature::Kernel { samples, weights, bandwidth }
            }
            FeatureKind::Continuous => {
                let mut mean = [0.0; 2];
                let mut var = [0.0; 2];
                for c in 0..2 {
                    let wc = cw[c].max(f64::MIN_POSITIVE);
                    let m = (0..d.n).filter(|&i| y[i] as usize == c).map(|i| w[i] * d.at(i, j)).sum::<f64>() / wc;
                    let ss: f64 = (0..d.n).filter(|&i| y[i] as usize == c).map(|i| w[i] * (d.at(i, j) - m).powi(2)).sum();
                    mean[c] = m;
                    var[c] = (ss / (wc - 1.0).max(1.0)).max(VAR_FLOOR);
                }
                NbFeature::Gaussian { mean, var }
            }
            kind => {
                let mut levels: Vec<f64> = match kind {
                    FeatureKind::Binary => vec![0.0, 1.0],
                    FeatureKind::Categorical { levels } => levels.iter().map(|&l| l as f64).collect(),
                    FeatureKind::Continuous => unreachable!(),
                };
                for i in 0..d.n {
                    if !levels.contains(&d.at(i, j)) {
                        levels.push(d.at(i, j));
                    }
                }
                let l = levels.len() as f64;
                let mut probs = [vec![0.0; levels.len()], vec![0.0; levels.len()]];
                for i in 0..d.n {
                    let k = levels.iter().position(|&v| v == d.at(i, j)).unwrap();
                    probs[y[i] as usize][k] += w[i];
                }
                let mut unseen = [0.0; 2];
                for c in 0..2 {
                    let denom = cw[c] + params.fl * l;
                    for pr in probs[c].iter_mut() {
                        *pr = if denom > 0.0 { (*pr + params.fl) / denom } else { 0.0 };
                    }
                    unseen[c] = if denom > 0.0 { params.fl / denom } else { 0.0 };
                }
                NbFeature::Discrete { levels, probs, unseen }
            }
        })
        .collect();
    NaiveBayes { priors, features }
}

fn kernel_density(samples: &[f64], weights: &[f64], h: f64, x: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    // Contributions beyond 9 bandwidths are below 1e-17 of the peak.
    let lo = samples.partition_point(|&s| s < x - 9.0 * h);
    let hi = samples.partition_point(|&s| s <= x + 9.0 * h);
    let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    let sum: f64 = (lo..hi).map(|i| weights[i] * (-0.5 * ((x - samples[i]) / h).powi(2)).exp()).sum();
    norm * sum / total
}

impl NbFeature {
    fn log_likelihood(&self, x: f64, c: usize) -> f64 {
        let dens = match self {
            NbFeature::Gaussian { mean, var } => {
                return -0.5 * ((x - mean[c]).powi(2) / var[c] + (2.0 * std::f64::consts::PI * var[c]).ln());
            }
            NbFeature::Kernel { samples, weights, bandwidth } => {
                kernel_density(&samples[c], &weights[c], bandwidth[c], x)
            }
            NbFeature::Discrete { levels, probs, unseen } => match levels.iter().position(|&v| v == x) {
                Some(k) => probs[c][k],
                None => unseen[c],
            },
        };
        dens.max(DENSITY_FLOOR).ln()
    }
}

/// Posterior class probabilities `[P(0 | row), P(1 | row)]`.
pub fn nb_posterior(model: &NaiveBayes, row: &[f64]) -> [f64; 2] {
    let mut lp = [0, 1].map(|c| model.priors[c].max(DENSITY_FLOOR).ln());
    for (f, &x) in model.features.iter().zip(row) {
        for (c, v) in lp.iter_mut().enumerate() {
            *v += f.log_likelihood(x, c);
        }
    }
    let m = lp[0].max(lp[1]);
    let e = [(lp[0] - m).exp(), (lp[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_gaussians_give_half() {
        let model = NaiveBayes {
            priors: [0.5, 0.5],
            features: vec![NbFeature::Gaussian { mean: [0.0, 2.0], var: [1.0, 1.0] }],
        };
        let post = nb_posterior(&model, &[1.0]);
        assert!((post[0] - 0.5).abs() < 1e-15 && (post[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identical_likelihoods_give_half() {
        let model = NaiveBayes {
            priors: [0.5, 0.5],
            features: vec![NbFeature::Discrete { levels: vec![0.0, 1.0], probs: [vec![0.3, 0.7], vec![0.3, 0.7]], unseen: [0.0; 2] }],
        };
        assert_eq!(nb_posterior(&model, &[1.0]), [0.5, 0.5]);
    }

    fn categorical_design() -> (Design, Vec<f64>) {
        let mut d = Design::from_rows(vec![1.0, 1.0, 2.0, 2.0, 1.0, 2.0], 6, 1);
        d.kinds = vec![FeatureKind::Categorical { levels: vec![1, 2] }];
        (d, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
    }

    #[test]
    fn laplace_keeps_unseen_level_positive() {
        let (d, y) = categorical_design();
        let m = fit_naive_bayes(&d, &y, &[1.0; 6], &NbParams { fl: 1.0, usekernel: false, adjust: 1.0 });
        for c in 0..2 {
            assert!(m.features[0].log_likelihood(3.0, c).exp() > 0.0);
            assert!(m.features[0].log_likelihood(3.0, c) > DENSITY_FLOOR.ln());
        }
        let post = nb_posterior(&m, &[3.0]);
        assert!((post[0] + post[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_table_values() {
        let (d, y) = categorical_design();
        let m = fit_naive_bayes(&d, &y, &[1.0; 6], &NbParams { fl: 1.0, usekernel: false, adjust: 1.0 });
        let NbFeature::Discrete { probs, .. } = &m.features[0] else { panic!() };
        // Class 0 saw level 1 twice, level 2 once: (2+1)/(3+2), (1+1)/(3+2).
        assert_eq!(probs[0], vec![0.6, 0.4]);
    }

    #[test]
    fn gaussian_fit_and_kernel_agree_on_direction() {
        let x: Vec<f64> = (0..200).map(|i| if i < 100 { (i as f64) / 50.0 - 1.0 } else { (i as f64 - 100.0) / 50.0 + 1.0 }).collect();
        let d = Design::from_rows(x, 200, 1);
        let y: Vec<f64> = (0..200).map(|i| f64::from(i >= 100)).collect();
        for usekernel in [false, true] {
            let m = fit_naive_bayes(&d, &y, &[1.0; 200], &NbParams { fl: 0.0, usekernel, adjust: 1.0 });
            assert!(nb_posterior(&m, &[2.0])[1] > 0.9);
            assert!(nb_posterior(&m, &[-1.0])[0] > 0.9);
        }
    }

    #[test]
    fn silverman_matches_hand_value() {
        // sd = 1.2910, IQR over 1..4 (type-1 quantiles 1 and 3) = 2 -> 1.4925; min is sd.
        let h = silverman_bandwidth(&[1.0, 2.0, 3.0, 4.0], &[1.0; 4]);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((h - 0.9 * sd * 4f64.powf(-0.2)).abs() < 1e-12);
    }
}
