use serde::{Deserialize, Serialize};

use super::{fit_params, Algorithm, Design, HyperPoint, Params};
use crate::data::{Dataset, EndpointMode, FeatureKind};
use crate::error::{Error, Result};
use crate::preprocess::{apply_recipe, apply_recipe_detailed, fit_recipe, BalanceStrategy, Recipe, RecipeConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RangeBound {
    Interval { min: f64, max: f64 },
    Levels { levels: Vec<f64> },
}

/// Training support of one raw input feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub name: String,
    pub bound: RangeBound,
}

/// A trained estimator with its co-trained preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub algorithm: Algorithm,
    pub hyper: HyperPoint,
    pub mode: EndpointMode,
    pub outcome: String,
    pub recipe: Recipe,
    /// Columns the solver saw, after one-hot expansion.
    pub design_names: Vec<String>,
    pub params: Params,
    pub ranges: Vec<FeatureRange>,
    /// Positive iff `p > cutoff`.
    pub cutoff: f64,
    pub warnings: Vec<String>,
}

impl FittedModel {
    pub fn with_cutoff(mut self, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff < 1.0) {
            return Err(Error::Config(format!("cutoff must lie in (0,1), got {cutoff}")));
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    /// Raw prediction per row of an already preprocessed design.
    pub fn predict_design(&self, d: &Design) -> Vec<f64> {
        (0..d.n).map(|i| self.clamp(self.params.predict_row(d.row(i)))).collect()
    }

    fn clamp(&self, v: f64) -> f64 {
        match self.mode {
            EndpointMode::Classification => v.clamp(0.0, 1.0),
            EndpointMode::Regression => v,
        }
    }
}

pub(crate) fn feature_ranges(train: &Dataset, recipe: &Recipe) -> Result<Vec<FeatureRange>> {
    recipe
        .input
        .iter()
        .map(|spec| {
            let c = train.column_index(&spec.name)?;
            let obs = train.observed(c);
            let bound = match spec.kind {
                FeatureKind::Continuous => RangeBound::Interval {
                    min: obs.iter().copied().fold(f64::INFINITY, f64::min),
                    max: obs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                },
                _ => {
                    let mut levels = obs;
                    levels.sort_by(f64::total_cmp);
                    levels.dedup();
                    RangeBound::Levels { levels }
                }
            };
            Ok(FeatureRange { name: spec.name.clone(), bound })
        })
        .collect()
}

/// Fits the recipe on `train`, then the estimator on the transformed
/// (and, when configured, rebalanced) rows.
pub fn fit_model(
    train: &Dataset,
    algorithm: Algorithm,
    hyper: &HyperPoint,
    recipe_config: &RecipeConfig,
    recipe_seed: u64,
    model_seed: u64,
) -> Result<FittedModel> {
    let o = train.require_outcome()?;
    let mode = train.endpoint_mode();
    let recipe = fit_recipe(train, recipe_config, recipe_seed)?;
    let prepared = apply_recipe(&recipe, train, true)?;
    let (d, y) = Design::with_outcome(&prepared)?;
    let w = row_weights(&recipe_config.balance, &y);
    let (params, warnings) = fit_params(algorithm, hyper, &d, &y, &w, mode, model_seed)?;
    Ok(FittedModel {
        format_version: FORMAT_VERSION,
        algorithm,
        hyper: *hyper,
        mode,
        outcome: train.spec(o).name.clone(),
        ranges: feature_ranges(train, &recipe)?,
        recipe,
        design_names: d.names,
        params,
        cutoff: 0.5,
        warnings,
    })
}

pub(crate) fn row_weights(balance: &BalanceStrategy, y: &[f64]) -> Vec<f64> {
    balance.row_weights(y).unwrap_or_else(|| vec![1.0; y.len()])
}

/// Per-row predictions with the repairs and warnings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub mode: EndpointMode,
    pub row_ids: Vec<u64>,
    /// Probability of the positive class, or the predicted value.
    pub values: Vec<f64>,
    /// `p > cutoff` for classification.
    pub labels: Option<Vec<u8>>,
    /// Features filled in by the co-trained imputer, per row.
    pub imputed: Vec<Vec<String>>,
    /// Features outside the training support, per row.
    pub extrapolation: Vec<Vec<String>>,
}

impl Predictions {
    pub fn prob_negative(&self, row: usize) -> f64 {
        1.0 - self.values[row]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn predict(model: &FittedModel, ds: &Dataset) -> Result<Predictions> {
    let applied = apply_recipe_detailed(&model.recipe, ds, false)?;
    let d = Design::features(&applied.data)?;
    if d.names != model.design_names {
        return Err(Error::SchemaMismatch(format!(
            "preprocessed columns {:?} differ from the model's {:?}",
            d.names, model.design_names
        )));
    }
    let values = model.predict_design(&d);
    let labels = (model.mode == EndpointMode::Classification)
        .then(|| values.iter().map(|&p| u8::from(p > model.cutoff)).collect());
    let mut imputed = vec![Vec::new(); ds.n_rows()];
    for (r, name) in applied.imputed {
        imputed[r].push(name);
    }
    Ok(Predictions {
        mode: model.mode,
        row_ids: ds.row_ids().to_vec(),
        values,
        labels,
        imputed,
        extrapolation: crate::eval::extrapolation_flags(model, ds)?,
    })
}
