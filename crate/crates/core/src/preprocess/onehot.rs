use serde::{Deserialize, Serialize};

use crate::data::{ColumnSpec, Dataset, FeatureKind};
use crate::error::{Error, Result};

/// Expansion of one categorical column into per-level indicator columns.
///
/// An empty `levels` list is the identity map returned for binary columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotMap {
    pub source: String,
    pub levels: Vec<i64>,
    pub produced: Vec<String>,
}

impl OneHotMap {
    pub fn is_identity(&self) -> bool {
        self.levels.is_empty()
    }

    /// Encodes `ds` with this map.
    ///
    /// Returns the encoded data and the rows whose source level was not seen
    /// at fit time; those rows get all-zero indicators.
    pub fn apply(&self, ds: &Dataset) -> Result<(Dataset, Vec<usize>)> {
        if self.is_identity() {
            return Ok((ds.clone(), Vec::new()));
        }
        let src = ds.column_index(&self.source)?;
        let keep: Vec<usize> = (0..ds.n_cols()).filter(|&c| c != src).collect();
        let p_out = keep.len() + self.levels.len();
        let mut specs: Vec<ColumnSpec> = keep.iter().map(|&c| ds.spec(c).clone()).collect();
        specs.extend(self.produced.iter().map(|n| ColumnSpec::feature(n.clone(), FeatureKind::Binary)));

        let mut values = Vec::with_capacity(ds.n_rows() * p_out);
        let mut missing = Vec::with_capacity(ds.n_rows() * p_out);
        let mut unknown = Vec::new();
        for r in 0..ds.n_rows() {
            for &c in &keep {
                values.push(ds.value(r, c));
                missing.push(ds.is_missing(r, c));
            }
            match ds.get(r, src) {
                None => {
                    values.extend(std::iter::repeat_n(0.0, self.levels.len()));
                    missing.extend(std::iter::repeat_n(true, self.levels.len()));
                }
                Some(v) => {
                    let hit = self.levels.iter().position(|&l| l as f64 == v);
                    if hit.is_none() {
                        unknown.push(r);
                    }
                    for i in 0..self.levels.len() {
                        values.push(if Some(i) == hit { 1.0 } else { 0.0 });
                        missing.push(false);
                    }
                }
            }
        }
        Ok((ds.with_columns(specs, values, missing), unknown))
    }
}

/// Produced column name for one level.
pub fn level_column_name(source: &str, level: i64) -> String {
    format!("{source}={level}")
}

/// Replaces categorical column `col` with one 0/1 column per declared level,
/// appended at the end. Binary columns come back unchanged with an identity map.
pub fn one_hot_encode(ds: &Dataset, col: usize) -> Result<(Dataset, OneHotMap)> {
    let spec = ds.spec(col);
    match &spec.kind {
        FeatureKind::Binary => Ok((
            ds.clone(),
            OneHotMap { source: spec.name.clone(), levels: Vec::new(), produced: Vec::new() },
        )),
        FeatureKind::Categorical { levels } => {
            let map = OneHotMap {
                source: spec.name.clone(),
                levels: levels.clone(),
                produced: levels.iter().map(|&l| level_column_name(&spec.name, l)).collect(),
            };
            let (out, unknown) = map.apply(ds)?;
            if let Some(&r) = unknown.first() {
                return Err(Error::SchemaMismatch(format!(
                    "undeclared level {} in column {:?} at row {r}",
                    ds.value(r, col),
                    spec.name
                )));
            }
            Ok((out, map))
        }
        FeatureKind::Continuous => Err(Error::SchemaMismatch(format!("cannot one-hot continuous column {:?}", spec.name))),
    }
}
