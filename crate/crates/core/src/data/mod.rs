//! Tabular datasets: typed columns, a missing-value mask, and the designated
//! outcome column.

mod csv_io;
mod sample_size;
mod split;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to};
pub use sample_size::{sample_size_check, SampleSizeAdvice, SampleSizeVerdict};
pub use split::{class_balance_check, split_train_test, BalanceCheck, SplitPair};
pub use synth::{generate_synthetic_cohort, GeneratorSpec, Marginal, VariableSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Binary,
    /// Integer-coded levels, in declaration order.
    Categorical { levels: Vec<i64> },
}

impl FeatureKind {
    pub fn is_continuous(&self) -> bool {
        matches!(self, FeatureKind::Continuous)
    }

    /// Whether `v` is admissible for this kind.
    pub fn accepts(&self, v: f64) -> bool {
        match self {
            FeatureKind::Continuous => v.is_finite(),
            FeatureKind::Binary => v == 0.0 || v == 1.0,
            FeatureKind::Categorical { levels } => {
                v.fract() == 0.0 && levels.iter().any(|&l| l as f64 == v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Feature,
    Outcome,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub role: Role,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind, role: Role) -> Self {
        ColumnSpec { name: name.into(), kind, role }
    }

    pub fn feature(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self::new(name, kind, Role::Feature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointMode {
    Classification,
    Regression,
}

/// Row-major table with a parallel missing mask.
///
/// Each row carries a stable `row_id` assigned at load/generation time. Row
/// ids survive splitting, resampling and balancing (synthetic SMOTE rows get
/// fresh ids above every source id) and are what leakage audits compare.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    specs: Vec<ColumnSpec>,
    n_rows: usize,
    values: Vec<f64>,
    missing: Vec<bool>,
    row_ids: Vec<u64>,
    endpoint_mode: EndpointMode,
}

impl Dataset {
    /// Builds a dataset from row-major cells, `None` marking a missing cell.
    pub fn from_rows(specs: Vec<ColumnSpec>, rows: Vec<Vec<Option<f64>>>, endpoint_mode: EndpointMode) -> Result<Self> {
        let n_cols = specs.len();
        let n_rows = rows.len();
        let mut values = Vec::with_capacity(n_rows * n_cols);
        let mut missing = Vec::with_capacity(n_rows * n_cols);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::SchemaMismatch(format!("row {r} has {} cells, expected {n_cols}", row.len())));
            }
            for cell in row {
                values.push(cell.unwrap_or(0.0));
                missing.push(cell.is_none());
            }
        }
        let row_ids = (0..n_rows as u64).collect();
        Self::from_parts(specs, n_rows, values, missing, row_ids, endpoint_mode)
    }

    /// Builds a dataset from column vectors, all complete.
    pub fn from_columns(specs: Vec<ColumnSpec>, columns: &[Vec<f64>], endpoint_mode: EndpointMode) -> Result<Self> {
        if specs.len() != columns.len() {
            return Err(Error::SchemaMismatch(format!("{} specs for {} columns", specs.len(), columns.len())));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::SchemaMismatch("columns differ in length".into()));
        }
        let n_cols = columns.len();
        let mut values = vec![0.0; n_rows * n_cols];
        for (c, col) in columns.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                values[r * n_cols + c] = v;
            }
        }
        let row_ids = (0..n_rows as u64).collect();
        Self::from_parts(specs, n_rows, values, vec![false; n_rows * n_cols], row_ids, endpoint_mode)
    }

    pub(crate) fn from_parts(
        specs: Vec<ColumnSpec>,
        n_rows: usize,
        values: Vec<f64>,
        missing: Vec<bool>,
        row_ids: Vec<u64>,
        endpoint_mode: EndpointMode,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for s in &specs {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::DuplicateColumnName(s.name.clone()));
            }
        }
        if specs.iter().filter(|s| s.role == Role::Outcome).count() > 1 {
            return Err(Error::SchemaMismatch("more than one outcome column".into()));
        }
        debug_assert_eq!(values.len(), n_rows * specs.len());
        debug_assert_eq!(missing.len(), values.len());
        debug_assert_eq!(row_ids.len(), n_rows);
        Ok(Dataset { specs, n_rows, values, missing, row_ids, endpoint_mode })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.specs.len()
    }

    pub fn specs(&self) -> &[ColumnSpec] {
        &self.specs
    }

    pub fn spec(&self, col: usize) -> &ColumnSpec {
        &self.specs[col]
    }

    pub fn endpoint_mode(&self) -> EndpointMode {
        self.endpoint_mode
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn names(&self) -> Vec<&str> {
        self.specs.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.specs
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Cell value, `None` when masked missing.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.n_cols() + col;
        if self.missing[i] {
            None
        } else {
            Some(self.values[i])
        }
    }

    /// Raw slot value; meaningless when the cell is missing.
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[row * p..(row + 1) * p]
    }

    pub fn row_missing(&self, row: usize) -> &[bool] {
        let p = self.n_cols();
        &self.missing[row * p..(row + 1) * p]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, v: Option<f64>) {
        let i = row * self.n_cols() + col;
        self.values[i] = v.unwrap_or(0.0);
        self.missing[i] = v.is_none();
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn column_missing_count(&self, col: usize) -> usize {
        (0..self.n_rows).filter(|&r| self.is_missing(r, col)).count()
    }

    /// Observed values of one column, in row order.
    pub fn observed(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).filter_map(|r| self.get(r, col)).collect()
    }

    pub fn outcome_index(&self) -> Option<usize> {
        self.specs.iter().position(|s| s.role == Role::Outcome)
    }

    pub fn require_outcome(&self) -> Result<usize> {
        self.outcome_index()
            .ok_or_else(|| Error::SchemaMismatch("no outcome column designated".into()))
    }

    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.n_cols()).filter(|&c| self.specs[c].role == Role::Feature).collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.feature_indices().into_iter().map(|c| self.specs[c].name.clone()).collect()
    }

    /// Outcome values; fails if any outcome cell is missing.
    pub fn outcome(&self) -> Result<Vec<f64>> {
        let c = self.require_outcome()?;
        (0..self.n_rows)
            .map(|r| {
                self.get(r, c).ok_or_else(|| {
                    Error::DegenerateOutcome(format!("outcome missing at row {r}"))
                })
            })
            .collect()
    }

    /// Marks `name` as the outcome (any previous outcome becomes ignored).
    pub fn with_outcome(mut self, name: &str, mode: EndpointMode) -> Result<Self> {
        let c = self.column_index(name)?;
        for s in &mut self.specs {
            if s.role == Role::Outcome {
                s.role = Role::Ignored;
            }
        }
        self.specs[c].role = Role::Outcome;
        self.endpoint_mode = mode;
        Ok(self)
    }

    /// Sets the role of the named columns to `Ignored`.
    pub fn ignore_columns(mut self, names: &[String]) -> Result<Self> {
        for n in names {
            let c = self.column_index(n)?;
            self.specs[c].role = Role::Ignored;
        }
        Ok(self)
    }

    /// Rows in the given order (duplicates allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let p = self.n_cols();
        let mut values = Vec::with_capacity(rows.len() * p);
        let mut missing = Vec::with_capacity(rows.len() * p);
        let mut row_ids = Vec::with_capacity(rows.len());
        for &r in rows {
            values.extend_from_slice(self.row(r));
            missing.extend_from_slice(self.row_missing(r));
            row_ids.push(self.row_ids[r]);
        }
        Dataset {
            specs: self.specs.clone(),
            n_rows: rows.len(),
            values,
            missing,
            row_ids,
            endpoint_mode: self.endpoint_mode,
        }
    }

    /// Columns in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let p = self.n_cols();
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        let mut missing = Vec::with_capacity(self.n_rows * cols.len());
        for r in 0..self.n_rows {
            for &c in cols {
                values.push(self.values[r * p + c]);
                missing.push(self.missing[r * p + c]);
            }
        }
        Dataset {
            specs: cols.iter().map(|&c| self.specs[c].clone()).collect(),
            n_rows: self.n_rows,
            values,
            missing,
            row_ids: self.row_ids.clone(),
            endpoint_mode: self.endpoint_mode,
        }
    }

    /// Keeps the named feature columns (plus the outcome), dropping other features.
    pub fn keep_features(&self, names: &[String]) -> Result<Dataset> {
        let mut cols = Vec::new();
        for n in names {
            cols.push(self.column_index(n)?);
        }
        if let Some(o) = self.outcome_index() {
            cols.push(o);
        }
        Ok(self.select_columns(&cols))
    }

    /// Appends rows (with their ids) from a dataset sharing this schema.
    pub(crate) fn append_rows(&mut self, other_values: &[f64], other_missing: &[bool], ids: &[u64]) {
        self.values.extend_from_slice(other_values);
        self.missing.extend_from_slice(other_missing);
        self.row_ids.extend_from_slice(ids);
        self.n_rows += ids.len();
    }

    /// Replaces the columns, keeping rows and ids.
    pub(crate) fn with_columns(&self, specs: Vec<ColumnSpec>, values: Vec<f64>, missing: Vec<bool>) -> Dataset {
        debug_assert_eq!(values.len(), self.n_rows * specs.len());
        Dataset {
            specs,
            n_rows: self.n_rows,
            values,
            missing,
            row_ids: self.row_ids.clone(),
            endpoint_mode: self.endpoint_mode,
        }
    }

    /// Checks kind constraints on every observed cell.
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::MissingData);
        }
        for r in 0..self.n_rows {
            for (c, s) in self.specs.iter().enumerate() {
                if let Some(v) = self.get(r, c) {
                    if !s.kind.accepts(v) {
                        return Err(Error::SchemaMismatch(format!(
                            "value {v} at row {r} not admissible for {:?} column {:?}",
                            s.kind, s.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Outcome as 0/1 labels for classification.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.outcome()?
            .into_iter()
            .map(|v| {
                if v == 0.0 {
                    Ok(0)
                } else if v == 1.0 {
                    Ok(1)
                } else {
                    Err(Error::DegenerateOutcome(format!("non-binary outcome value {v}")))
                }
            })
            .collect()
    }
}
