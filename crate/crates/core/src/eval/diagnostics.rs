use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{FittedModel, RangeBound};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    HigherIsBetter,
    LowerIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverfitGap {
    /// Positive means the test cohort did worse.
    pub gap: f64,
    pub threshold: f64,
    pub flagged: bool,
}

/// Train/test gap. Default thresholds: 0.05 absolute for higher-is-better
/// metrics, 10% of the training value for lower-is-better ones.
pub fn overfit_gap(train: f64, test: f64, kind: GapKind, threshold: Option<f64>) -> OverfitGap {
    match kind {
        GapKind::HigherIsBetter => {
            let threshold = threshold.unwrap_or(0.05);
            let gap = train - test;
            OverfitGap { gap, threshold, flagged: gap > threshold }
        }
        GapKind::LowerIsBetter => {
            let threshold = threshold.unwrap_or(0.10);
            let gap = test - train;
            OverfitGap { gap, threshold, flagged: gap > threshold * train.abs() }
        }
    }
}

/// Per row, the features whose value lies outside the training support
/// (continuous range or seen level set). Missing cells are not flagged.
pub fn extrapolation_flags(model: &FittedModel, ds: &Dataset) -> Result<Vec<Vec<String>>> {
    let mut cols = Vec::with_capacity(model.ranges.len());
    for range in &model.ranges {
        let c = ds
            .column_index(&range.name)
            .map_err(|_| Error::SchemaMismatch(format!("required feature column {:?} is missing", range.name)))?;
        cols.push(c);
    }
    Ok((0..ds.n_rows())
        .map(|r| {
            model
                .ranges
                .iter()
                .zip(&cols)
                .filter(|(range, &c)| {
                    ds.get(r, c).is_some_and(|v| match &range.bound {
                        RangeBound::Interval { min, max } => v < *min || v > *max,
                        RangeBound::Levels { levels } => !levels.contains(&v),
                    })
                })
                .map(|(range, _)| range.name.clone())
                .collect()
        })
        .collect())
}
