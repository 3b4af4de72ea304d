use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EndpointMode};
use crate::error::{Error, Result};
use crate::eval::auc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub name: String,
    pub raw: f64,
    /// Affine rescaling of `raw` onto [0, 100].
    pub scaled: f64,
    /// The feature took a single observed value.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub mode: EndpointMode,
    /// In dataset column order.
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    /// Entries by decreasing score; ties keep column order.
    pub fn ranked(&self) -> Vec<&ImportanceEntry> {
        let mut v: Vec<&ImportanceEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| b.raw.total_cmp(&a.raw));
        v
    }
}

/// Single-feature filter score: folded AUC for classification, squared
/// correlation for regression. Rows where the feature is missing are skipped.
pub(crate) fn filter_scores(ds: &Dataset) -> Result<Vec<(f64, bool)>> {
    let o = ds.require_outcome()?;
    let mode = ds.endpoint_mode();
    Ok(ds
        .feature_indices()
        .into_iter()
        .map(|c| {
            let (x, y): (Vec<f64>, Vec<f64>) = (0..ds.n_rows())
                .filter_map(|r| Some((ds.get(r, c)?, ds.get(r, o)?)))
                .unzip();
            let constant = x.windows(2).all(|w| w[0] == w[1]);
            match mode {
                EndpointMode::Classification => {
                    let labels: Vec<u8> = y.iter().map(|&v| u8::from(v == 1.0)).collect();
                    match auc(&x, &labels) {
                        Ok(a) if !constant => (a.max(1.0 - a), false),
                        _ => (0.5, constant),
                    }
                }
                EndpointMode::Regression => {
                    let n = x.len() as f64;
                    let mx = x.iter().sum::<f64>() / n;
                    let my = y.iter().sum::<f64>() / n;
                    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
                    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
                    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
                    if constant || sxx <= 0.0 || syy <= 0.0 {
                        (0.0, constant)
                    } else {
                        ((sxy * sxy / (sxx * syy)).min(1.0), false)
                    }
                }
            }
        })
        .collect())
}

pub fn variable_importance(train: &Dataset) -> Result<ImportanceReport> {
    if train.endpoint_mode() == EndpointMode::Classification {
        let labels = train.labels()?;
        if !(labels.contains(&0) && labels.contains(&1)) {
            return Err(Error::SingleClass);
        }
    }
    let scores = filter_scores(train)?;
    let lo = scores.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = scores.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let entries = train
        .feature_names()
        .into_iter()
        .zip(scores)
        .map(|(name, (raw, constant))| {
            let scaled = if hi > lo { 100.0 * (raw - lo) / (hi - lo) } else { 100.0 };
            ImportanceEntry { name, raw, scaled, constant }
        })
        .collect();
    Ok(ImportanceReport { mode: train.endpoint_mode(), entries })
}
