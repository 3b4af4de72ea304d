use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    Zscore,
    Minmax,
}

/// Per-column affine map `x -> (x - offset) / divisor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledColumn {
    pub name: String,
    /// Mean (zscore) or minimum (minmax).
    pub offset: f64,
    /// Sample sd (zscore) or range (minmax); 1 for constant columns.
    pub divisor: f64,
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mode: ScaleMode,
    pub columns: Vec<ScaledColumn>,
}

impl Scaler {
    /// Names of columns flagged constant at fit time.
    pub fn constant_columns(&self) -> Vec<&str> {
        self.columns.iter().filter(|c| c.constant).map(|c| c.name.as_str()).collect()
    }
}

/// Fits on observed cells of `cols` in `train`; zscore uses the n-1 sd.
pub fn fit_scaler(train: &Dataset, cols: &[usize], mode: ScaleMode) -> Result<Scaler> {
    if train.n_rows() == 0 {
        return Err(Error::MissingData);
    }
    let mut columns = Vec::with_capacity(cols.len());
    for &c in cols {
        let spec = train.spec(c);
        if !spec.kind.is_continuous() {
            return Err(Error::NonContinuousColumn(spec.name.clone()));
        }
        let v = train.observed(c);
        if v.is_empty() {
            return Err(Error::TooFewDonors { column: spec.name.clone(), observed: 0, k: 1 });
        }
        let (offset, spread) = match mode {
            ScaleMode::Zscore => {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                let sd = if v.len() > 1 {
                    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
                } else {
                    0.0
                };
                (m, sd)
            }
            ScaleMode::Minmax => {
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            }
        };
        let constant = !(spread > 0.0);
        columns.push(ScaledColumn {
            name: spec.name.clone(),
            offset,
            divisor: if constant { 1.0 } else { spread },
            constant,
        });
    }
    Ok(Scaler { mode, columns })
}

/// Applies training statistics; missing cells stay missing.
///
/// Not idempotent: applying twice rescales already-scaled values.
pub fn apply_scaler(s: &Scaler, ds: &Dataset) -> Result<Dataset> {
    let mut out = ds.clone();
    for col in &s.columns {
        let c = ds.column_index(&col.name)?;
        for r in 0..ds.n_rows() {
            if let Some(v) = ds.get(r, c) {
                out.set(r, c, Some((v - col.offset) / col.divisor));
            }
        }
    }
    Ok(out)
}
