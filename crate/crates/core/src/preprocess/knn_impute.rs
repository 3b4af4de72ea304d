use serde::{Deserialize, Serialize};

use super::distance::{k_smallest, MixedDistance};
use crate::data::{ColumnSpec, Dataset, FeatureKind};
use crate::error::{Error, Result};

/// k-nearest-neighbour imputer holding a copy of the training feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnImputer {
    pub k: usize,
    pub columns: Vec<ColumnSpec>,
    pub distance: MixedDistance,
    pub reference: Vec<f64>,
    pub reference_missing: Vec<bool>,
    /// Missing cells per column in the fit data.
    pub missing_counts: Vec<usize>,
}

impl KnnImputer {
    pub fn n_reference(&self) -> usize {
        self.reference.len() / self.columns.len().max(1)
    }

    pub fn total_missing(&self) -> usize {
        self.missing_counts.iter().sum()
    }

    fn ref_row(&self, i: usize) -> (&[f64], &[bool]) {
        let p = self.columns.len();
        (&self.reference[i * p..(i + 1) * p], &self.reference_missing[i * p..(i + 1) * p])
    }
}

/// Stores the feature rows of `train` as donors.
pub fn fit_knn_imputer(train: &Dataset, k: usize) -> Result<KnnImputer> {
    if train.n_rows() == 0 {
        return Err(Error::MissingData);
    }
    if k == 0 {
        return Err(Error::InvalidHyper("imputer k must be >= 1".into()));
    }
    let feats = train.feature_indices();
    let columns: Vec<ColumnSpec> = feats.iter().map(|&c| train.spec(c).clone()).collect();
    let mut missing_counts = Vec::with_capacity(feats.len());
    for &c in &feats {
        let miss = train.column_missing_count(c);
        let observed = train.n_rows() - miss;
        if observed < k {
            return Err(Error::TooFewDonors { column: train.spec(c).name.clone(), observed, k });
        }
        missing_counts.push(miss);
    }
    let kinds: Vec<FeatureKind> = columns.iter().map(|s| s.kind.clone()).collect();
    let distance = MixedDistance::fit(&kinds, feats.iter().map(|&c| train.observed(c)));
    let sub = train.select_columns(&feats);
    let mut reference = Vec::with_capacity(sub.n_rows() * feats.len());
    let mut reference_missing = Vec::with_capacity(sub.n_rows() * feats.len());
    for r in 0..sub.n_rows() {
        reference.extend_from_slice(sub.row(r));
        reference_missing.extend_from_slice(sub.row_missing(r));
    }
    Ok(KnnImputer { k, columns, distance, reference, reference_missing, missing_counts })
}

/// Fills every missing feature cell from the k nearest donors that observe it:
/// the donor mean for continuous columns, the donor mode for binary and
/// categorical ones. Ties in distance go to the lower reference index.
pub fn impute(imp: &KnnImputer, ds: &Dataset) -> Result<Dataset> {
    Ok(impute_with_report(imp, ds)?.0)
}

/// Like [`impute`], also returning `(row, column name)` of every filled cell.
pub fn impute_with_report(imp: &KnnImputer, ds: &Dataset) -> Result<(Dataset, Vec<(usize, String)>)> {
    let mut cols = Vec::with_capacity(imp.columns.len());
    for spec in &imp.columns {
        let c = ds.column_index(&spec.name).map_err(|_| {
            Error::SchemaMismatch(format!("column {:?} expected by the imputer is absent", spec.name))
        })?;
        if ds.spec(c).kind != spec.kind {
            return Err(Error::SchemaMismatch(format!("column {:?} changed kind", spec.name)));
        }
        cols.push(c);
    }
    let mut out = ds.clone();
    let mut filled = Vec::new();
    let p = cols.len();
    let n_ref = imp.n_reference();
    let mut q = vec![0.0; p];
    let mut qm = vec![false; p];
    let mut dist = vec![0.0; n_ref];
    for r in 0..ds.n_rows() {
        if !cols.iter().any(|&c| ds.is_missing(r, c)) {
            continue;
        }
        for (j, &c) in cols.iter().enumerate() {
            q[j] = ds.value(r, c);
            qm[j] = ds.is_missing(r, c);
        }
        for (i, d) in dist.iter_mut().enumerate() {
            let (rv, rm) = imp.ref_row(i);
            *d = imp.distance.masked(&q, &qm, rv, rm);
        }
        let order = k_smallest(&dist, n_ref);
        for (j, &c) in cols.iter().enumerate() {
            if !qm[j] {
                continue;
            }
            let donors: Vec<f64> = order
                .iter()
                .filter_map(|&i| {
                    let (rv, rm) = imp.ref_row(i);
                    (!rm[j]).then_some(rv[j])
                })
                .take(imp.k)
                .collect();
            if donors.is_empty() {
                return Err(Error::TooFewDonors { column: imp.columns[j].name.clone(), observed: 0, k: imp.k });
            }
            let v = match imp.columns[j].kind {
                FeatureKind::Continuous => donors.iter().sum::<f64>() / donors.len() as f64,
                _ => mode(&donors),
            };
            out.set(r, c, Some(v));
            filled.push((r, imp.columns[j].name.clone()));
        }
    }
    Ok((out, filled))
}

/// Most frequent value; ties go to the value seen first (nearest donor).
fn mode(values: &[f64]) -> f64 {
    let mut best = values[0];
    let mut best_count = 0;
    for (i, &v) in values.iter().enumerate() {
        if values[..i].contains(&v) {
            continue;
        }
        let count = values.iter().filter(|&&x| x == v).count();
        if count > best_count {
            best = v;
            best_count = count;
        }
    }
    best
}
