use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gamma::chi2_sf;
use crate::error::{Error, Result};
use crate::models::design::logit;
use crate::models::{irls_logistic_with, IrlsOptions};

const CLIP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub mean_predicted: f64,
    pub observed_fraction: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HosmerLemeshow {
    pub statistic: f64,
    pub p_value: f64,
    pub df: usize,
    /// Groups merged into a neighbour because their variance term was zero.
    pub merged_groups: usize,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub intercept: f64,
    pub slope: f64,
    pub brier: f64,
    pub eo_ratio: f64,
    /// Grouped ECI over the same bins.
    pub eci: f64,
    pub hl_stat: f64,
    pub hl_p: f64,
    pub bins: Vec<CalibrationBin>,
}

fn check(probs: &[f64], labels: &[u8]) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(Error::SchemaMismatch("predictions and labels differ in length".into()));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Row indices of `g` near-equal groups of ascending predictions (sizes differ
/// by at most one, larger groups first).
fn groups(probs: &[f64], g: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(a.cmp(&b)));
    let (base, extra) = (probs.len() / g, probs.len() % g);
    let mut out = Vec::with_capacity(g);
    let mut start = 0;
    for k in 0..g {
        let len = base + usize::from(k < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

pub fn calibration_bins(probs: &[f64], labels: &[u8], g: usize) -> Result<Vec<CalibrationBin>> {
    if g == 0 || probs.len() < g {
        return Err(Error::TooFewRows(format!("{} rows for {g} calibration bins", probs.len())));
    }
    Ok(groups(probs, g)
        .into_iter()
        .map(|rows| {
            let c = rows.len() as f64;
            CalibrationBin {
                mean_predicted: rows.iter().map(|&i| probs[i]).sum::<f64>() / c,
                observed_fraction: rows.iter().map(|&i| f64::from(labels[i])).sum::<f64>() / c,
                count: rows.len(),
            }
        })
        .collect())
}

/// Hosmer–Lemeshow over `g` equal-count groups, chi-square with `g - 2` df.
pub fn hosmer_lemeshow(probs: &[f64], labels: &[u8], g: usize) -> Result<HosmerLemeshow> {
    if g < 3 || probs.len() < 2 * g {
        return Err(Error::TooFewRows(format!("Hosmer-Lemeshow needs n >= 2g, got n={} g={g}", probs.len())));
    }
    // (observed, expected, count) per group; zero-variance groups fold into a neighbour.
    let mut cells: Vec<(f64, f64, f64)> = groups(probs, g)
        .into_iter()
        .map(|rows| {
            (
                rows.iter().map(|&i| f64::from(labels[i])).sum(),
                rows.iter().map(|&i| probs[i]).sum(),
                rows.len() as f64,
            )
        })
        .collect();
    let variance = |c: &(f64, f64, f64)| c.1 * (1.0 - c.1 / c.2);
    let mut merged_groups = 0;
    let mut k = 0;
    while k < cells.len() && cells.len() > 1 {
        if variance(&cells[k]) <= 0.0 {
            let cell = cells.remove(k);
            let into = if k < cells.len() { k } else { k - 1 };
            cells[into].0 += cell.0;
            cells[into].1 += cell.1;
            cells[into].2 += cell.2;
            merged_groups += 1;
            k = into;
        } else {
            k += 1;
        }
    }
    let statistic: f64 = cells.iter().map(|c| (c.0 - c.1).powi(2) / variance(c)).sum();
    let df = cells.len().saturating_sub(2).max(1);
    let p_value = chi2_sf(statistic, df as f64);
    let note = if p_value > 0.2 {
        "p > 0.2: no evidence of poor calibration".to_string()
    } else {
        "p <= 0.2: calibration may be poor".to_string()
    };
    Ok(HosmerLemeshow { statistic, p_value, df, merged_groups, note })
}

pub fn calibration_report(probs: &[f64], labels: &[u8], g: usize) -> Result<CalibrationReport> {
    check(probs, labels)?;
    let n = probs.len();
    let bins = calibration_bins(probs, labels, g)?;
    let lp: Vec<f64> = probs.iter().map(|&p| logit(p.clamp(CLIP, 1.0 - CLIP))).collect();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();

    let free = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { lp[i] });
    let slope = irls_logistic_with(&free, &y, &IrlsOptions::default())?.coef[1];
    let ones = DMatrix::from_element(n, 1, 1.0);
    let pinned = IrlsOptions { offset: Some(lp), ..IrlsOptions::default() };
    let intercept = irls_logistic_with(&ones, &y, &pinned)?.coef[0];

    let brier = probs.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n as f64;
    let eo_ratio = probs.iter().sum::<f64>() / y.iter().sum::<f64>();
    let mut eci = 0.0;
    for (rows, bin) in groups(probs, g).iter().zip(&bins) {
        eci += rows.iter().map(|&i| (probs[i] - bin.observed_fraction).powi(2)).sum::<f64>();
    }
    let eci = 100.0 * eci / n as f64;
    let (hl_stat, hl_p) = if n >= 2 * g && g >= 3 {
        let hl = hosmer_lemeshow(probs, labels, g)?;
        (hl.statistic, hl.p_value)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(CalibrationReport { intercept, slope, brier, eo_ratio, eci, hl_stat, hl_p, bins })
}

/// Gaussian-kernel smoothed observed rate at `points` evenly spaced
/// predicted probabilities (bandwidth from Silverman's rule on the scores).
pub fn calibration_curve(probs: &[f64], labels: &[u8], points: usize) -> Vec<(f64, f64)> {
    let h = crate::models::silverman_bandwidth(probs, &vec![1.0; probs.len()]).max(0.02);
    let lo = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..points)
        .map(|k| {
            let x = if points > 1 { lo + (hi - lo) * k as f64 / (points - 1) as f64 } else { lo };
            let (mut num, mut den) = (0.0, 0.0);
            for (&p, &l) in probs.iter().zip(labels) {
                let w = (-0.5 * ((p - x) / h).powi(2)).exp();
                num += w * f64::from(l);
                den += w;
            }
            (x, if den > 0.0 { num / den } else { f64::NAN })
        })
        .collect()
}
