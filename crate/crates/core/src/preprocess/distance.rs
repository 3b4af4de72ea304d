//! Gower-style distance over mixed column types.
//!
//! Continuous columns contribute the squared difference of z-scored values,
//! binary and categorical columns a 0/1 mismatch; the sum is averaged over
//! the columns observed in both rows.

use serde::{Deserialize, Serialize};

use crate::data::FeatureKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnMetric {
    Scaled { sd: f64 },
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedDistance {
    pub metrics: Vec<ColumnMetric>,
}

impl MixedDistance {
    /// Fits scale statistics from the observed values of each column.
    pub fn fit<'a>(kinds: &[FeatureKind], columns: impl Iterator<Item = Vec<f64>> + 'a) -> Self {
        let metrics = kinds
            .iter()
            .zip(columns)
            .map(|(kind, v)| match kind {
                FeatureKind::Continuous => {
                    let n = v.len();
                    let sd = if n > 1 {
                        let m = v.iter().sum::<f64>() / n as f64;
                        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                    } else {
                        0.0
                    };
                    ColumnMetric::Scaled { sd: if sd > 0.0 { sd } else { 1.0 } }
                }
                _ => ColumnMetric::Mismatch,
            })
            .collect();
        MixedDistance { metrics }
    }

    /// Distance between complete rows.
    pub fn complete(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut sum = 0.0;
        for ((m, x), y) in self.metrics.iter().zip(a).zip(b) {
            sum += term(m, *x, *y);
        }
        sum / self.metrics.len().max(1) as f64
    }

    /// Distance using only mutually observed columns; infinite if none.
    pub fn masked(&self, a: &[f64], a_missing: &[bool], b: &[f64], b_missing: &[bool]) -> f64 {
        let mut sum = 0.0;
        let mut used = 0usize;
        for (i, m) in self.metrics.iter().enumerate() {
            if a_missing[i] || b_missing[i] {
                continue;
            }
            sum += term(m, a[i], b[i]);
            used += 1;
        }
        if used == 0 {
            f64::INFINITY
        } else {
            sum / used as f64
        }
    }
}

#[inline]
fn term(m: &ColumnMetric, x: f64, y: f64) -> f64 {
    match *m {
        ColumnMetric::Scaled { sd } => ((x - y) / sd).powi(2),
        ColumnMetric::Mismatch => {
            if x == y {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Indices of the `k` smallest distances; ties go to the lower index.
pub fn k_smallest(dist: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    let k = k.min(idx.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &usize, b: &usize| dist[*a].total_cmp(&dist[*b]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx
}
