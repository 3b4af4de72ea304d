use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::balance::{rebalance, BalanceStrategy};
use super::knn_impute::{fit_knn_imputer, impute_with_report, KnnImputer};
use super::onehot::{one_hot_encode, OneHotMap};
use super::scaler::{apply_scaler, fit_scaler, ScaleMode, Scaler};
use crate::data::{ColumnSpec, Dataset, FeatureKind, Role};
use crate::error::{Error, Result};

/// What a recipe should fit. `RecipeConfig::default()` is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RecipeConfig {
    /// Neighbours for kNN imputation; `None` disables imputation.
    pub impute_k: Option<usize>,
    /// Expand every categorical feature.
    pub one_hot_all: bool,
    /// Additional categorical columns to expand by name.
    pub one_hot: Vec<String>,
    pub scale: Option<ScaleMode>,
    pub balance: BalanceStrategy,
}

impl RecipeConfig {
    /// kNN(5) imputation, one-hot of all categoricals, z-scoring, no balancing.
    pub fn standard() -> Self {
        RecipeConfig {
            impute_k: Some(5),
            one_hot_all: true,
            one_hot: Vec::new(),
            scale: Some(ScaleMode::Zscore),
            balance: BalanceStrategy::None,
        }
    }
}

/// Preprocessing fitted on one set of training rows: impute, then one-hot,
/// then scale; balancing runs last and only on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub input: Vec<ColumnSpec>,
    pub imputer: Option<KnnImputer>,
    pub one_hot: Vec<OneHotMap>,
    pub scaler: Option<Scaler>,
    pub balance: BalanceStrategy,
    pub balance_seed: u64,
    /// SHA-256 over the sorted ids of the rows the statistics came from.
    pub fingerprint: String,
    #[serde(skip)]
    fit_row_ids: Vec<u64>,
}

/// Result of applying a recipe, with what was repaired along the way.
#[derive(Debug, Clone)]
pub struct Applied {
    pub data: Dataset,
    /// `(row, column)` of every imputed cell.
    pub imputed: Vec<(usize, String)>,
    /// `(row, column)` of every categorical level unseen at fit time.
    pub unknown_levels: Vec<(usize, String)>,
}

pub fn fingerprint_rows(ids: &[u64]) -> String {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut h = Sha256::new();
    for id in sorted {
        h.update(id.to_le_bytes());
    }
    hex::encode(h.finalize())
}

impl Recipe {
    /// Distinct training row ids the statistics were computed from.
    ///
    /// Only populated in memory; a recipe loaded from a model file keeps the
    /// fingerprint but not the id list.
    pub fn fit_row_ids(&self) -> &[u64] {
        &self.fit_row_ids
    }

    pub fn input_names(&self) -> Vec<String> {
        self.input.iter().map(|s| s.name.clone()).collect()
    }
}

fn features_only(ds: &Dataset, input: &[ColumnSpec]) -> Result<Dataset> {
    let mut cols = Vec::with_capacity(input.len());
    for spec in input {
        let c = ds
            .column_index(&spec.name)
            .map_err(|_| Error::SchemaMismatch(format!("required feature column {:?} is missing", spec.name)))?;
        cols.push(c);
    }
    let out = ds.select_columns(&cols);
    for c in 0..out.n_cols() {
        if out.spec(c).role != Role::Feature {
            return Err(Error::SchemaMismatch(format!("column {:?} is not a feature", out.spec(c).name)));
        }
    }
    check_kinds(&out, input)?;
    Ok(out)
}

/// Binary and continuous cells must be admissible; unseen categorical levels
/// are tolerated here and flagged by the one-hot step.
fn check_kinds(ds: &Dataset, input: &[ColumnSpec]) -> Result<()> {
        for (c, spec) in input.iter().enumerate() {
            for r in 0..ds.n_rows() {
                if let Some(v) = ds.get(r, c) {
                    if !matches!(spec.kind, FeatureKind::Categorical { .. }) && !spec.kind.accepts(v) {
                        return Err(Error::SchemaMismatch(format!(
                            "value {v} at row {r} not admissible for column {:?}",
                            spec.name
                        )));
                    }
                }
            }
        }
        Ok(())
}

fn attach_outcome(features: Dataset, source: &Dataset) -> Dataset {
    let Some(o) = source.outcome_index() else {
        return features;
    };
    let p = features.n_cols();
    let mut specs = features.specs().to_vec();
    specs.push(source.spec(o).clone());
    let mut values = Vec::with_capacity(features.n_rows() * (p + 1));
    let mut missing = Vec::with_capacity(values.capacity());
    for r in 0..features.n_rows() {
        values.extend_from_slice(features.row(r));
        values.push(source.value(r, o));
        missing.extend_from_slice(features.row_missing(r));
        missing.push(source.is_missing(r, o));
    }
    features.with_columns(specs, values, missing)
}

/// Fits every transform on `train` only.
pub fn fit_recipe(train: &Dataset, config: &RecipeConfig, seed: u64) -> Result<Recipe> {
    config.balance.validate()?;
    let input: Vec<ColumnSpec> = train.feature_indices().iter().map(|&c| train.spec(c).clone()).collect();
    if input.is_empty() {
        return Err(Error::SchemaMismatch("no feature columns".into()));
    }
    let mut ds = features_only(train, &input)?;

    let imputer = match config.impute_k {
        Some(k) => {
            let imp = fit_knn_imputer(&ds, k)?;
            ds = impute_with_report(&imp, &ds)?.0;
            Some(imp)
        }
        None => None,
    };

    let mut maps = Vec::new();
    let targets: Vec<String> = input
        .iter()
        .filter(|s| {
            matches!(s.kind, FeatureKind::Categorical { .. }) && (config.one_hot_all || config.one_hot.contains(&s.name))
        })
        .map(|s| s.name.clone())
        .collect();
    for name in config.one_hot.iter().filter(|n| !targets.contains(n)) {
        if !input.iter().any(|s| &s.name == name) {
            return Err(Error::MissingColumn(name.clone()));
        }
    }
    for name in &targets {
        let c = ds.column_index(name)?;
        let (next, map) = one_hot_encode(&ds, c)?;
        ds = next;
        maps.push(map);
    }

    let scaler = match config.scale {
        Some(mode) => {
            let cols: Vec<usize> = (0..ds.n_cols()).filter(|&c| ds.spec(c).kind.is_continuous()).collect();
            Some(fit_scaler(&ds, &cols, mode)?)
        }
        None => None,
    };

    Ok(Recipe {
        input,
        imputer,
        one_hot: maps,
        scaler,
        balance: config.balance.clone(),
        balance_seed: seed,
        fingerprint: fingerprint_rows(train.row_ids()),
        fit_row_ids: {
            let mut ids = train.row_ids().to_vec();
            ids.sort_unstable();
            ids.dedup();
            ids
        },
    })
}

pub fn apply_recipe(r: &Recipe, ds: &Dataset, is_training: bool) -> Result<Dataset> {
    Ok(apply_recipe_detailed(r, ds, is_training)?.data)
}

/// Applies the fitted transforms; balancing only when `is_training`.
pub fn apply_recipe_detailed(r: &Recipe, ds: &Dataset, is_training: bool) -> Result<Applied> {
    let mut feats = features_only(ds, &r.input)?;
    let mut imputed = Vec::new();
    if let Some(imp) = &r.imputer {
        let (next, filled) = impute_with_report(imp, &feats)?;
        feats = next;
        imputed = filled;
    }
    let mut unknown_levels = Vec::new();
    for map in &r.one_hot {
        let (next, unknown) = map.apply(&feats)?;
        unknown_levels.extend(unknown.into_iter().map(|row| (row, map.source.clone())));
        feats = next;
    }
    if let Some(s) = &r.scaler {
        feats = apply_scaler(s, &feats)?;
    }
    let mut data = attach_outcome(feats, ds);
    if is_training {
        data = rebalance(&data, &r.balance, r.balance_seed)?;
    }
    Ok(Applied { data, imputed, unknown_levels })
}
