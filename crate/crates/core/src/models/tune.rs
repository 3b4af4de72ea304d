//! Resampled grid search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fitted::{fit_model, row_weights};
use super::{enet, log_grid, predict_grid, Algorithm, Design, FittedModel, HyperPoint};
use crate::data::{Dataset, EndpointMode};
use crate::error::{Error, Result};
use crate::eval;
use crate::preprocess::{apply_recipe, fit_recipe, BalanceStrategy, RecipeConfig};
use crate::resample::ResamplingPlan;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Roc,
    Rmse,
}

impl Metric {
    pub fn for_mode(mode: EndpointMode) -> Metric {
        match mode {
            EndpointMode::Classification => Metric::Roc,
            EndpointMode::Regression => Metric::Rmse,
        }
    }

    pub fn higher_is_better(self) -> bool {
        self == Metric::Roc
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Roc => "ROC",
            Metric::Rmse => "RMSE",
        }
    }

    /// Metric of `preds` against `truth`; NaN when undefined (one class).
    pub fn score(self, preds: &[f64], truth: &[f64]) -> f64 {
        match self {
            Metric::Roc => {
                let labels: Vec<u8> = truth.iter().map(|&v| u8::from(v == 1.0)).collect();
                eval::auc(preds, &labels).unwrap_or(f64::NAN)
            }
            Metric::Rmse => {
                (preds.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / preds.len().max(1) as f64).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainControl {
    pub plan: ResamplingPlan,
    pub metric: Metric,
    pub balance: BalanceStrategy,
    pub recipe: RecipeConfig,
    pub seed: u64,
}

impl TrainControl {
    pub fn new(plan: ResamplingPlan, metric: Metric) -> Self {
        TrainControl { plan, metric, balance: BalanceStrategy::None, recipe: RecipeConfig::standard(), seed: 0 }
    }

    pub fn recipe_config(&self) -> RecipeConfig {
        RecipeConfig { balance: self.balance.clone(), ..self.recipe.clone() }
    }

    pub fn validate(&self, mode: EndpointMode) -> Result<()> {
        self.plan.validate()?;
        self.balance.validate()?;
        if self.metric != Metric::for_mode(mode) {
            return Err(Error::Config(format!("metric {} does not fit a {mode:?} endpoint", self.metric.name())));
        }
        if mode == EndpointMode::Regression && !matches!(self.balance, BalanceStrategy::None) {
            return Err(Error::Config("class balancing needs a classification endpoint".into()));
        }
        Ok(())
    }

    fn recipe_seed(&self, resample: Option<usize>) -> u64 {
        derive_seed(self.seed, resample.map_or(u64::MAX, |r| 2 * r as u64))
    }

    fn model_seed(&self, resample: Option<usize>) -> u64 {
        derive_seed(self.seed, resample.map_or(u64::MAX - 1, |r| 2 * r as u64 + 1))
    }
}

/// An algorithm and its grid; an empty grid means the default grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub grid: Vec<HyperPoint>,
}

impl EstimatorSpec {
    pub fn new(algorithm: Algorithm, grid: Vec<HyperPoint>) -> Self {
        EstimatorSpec { algorithm, grid }
    }

    pub fn default_grid(algorithm: Algorithm) -> Self {
        EstimatorSpec { algorithm, grid: Vec::new() }
    }
}

/// Default grids over the preprocessed training design.
pub fn default_grid(algorithm: Algorithm, d: &Design, y: &[f64], mode: EndpointMode) -> Vec<HyperPoint> {
    let p = d.p.max(1);
    let lambda_path = |alpha: f64| {
        let st = enet::Standardized::new(d, &vec![1.0; d.n]);
        let lmax = st.lambda_max(y, alpha).max(1e-8);
        log_grid(lmax, lmax * 1e-3, 50)
    };
    let _ = mode;
    match algorithm {
        Algorithm::GlmLogistic | Algorithm::GlmLinear => vec![HyperPoint::Plain],
        Algorithm::Ridge => log_grid(1e2, 1e-4, 25).into_iter().map(|lambda| HyperPoint::Ridge { lambda }).collect(),
        Algorithm::Lasso => lambda_path(1.0).into_iter().map(|lambda| HyperPoint::Lasso { lambda }).collect(),
        Algorithm::ElasticNet => [0.0, 0.25, 0.5, 0.75, 1.0]
            .into_iter()
            .flat_map(|alpha| lambda_path(alpha).into_iter().map(move |lambda| HyperPoint::ElasticNet { lambda, alpha }))
            .collect(),
        Algorithm::RandomForest => {
            let mut m = vec![((p as f64).sqrt() as usize).max(1), (p / 3).max(1), p];
            m.sort_unstable();
            m.dedup();
            m.into_iter().map(|mtry| HyperPoint::RandomForest { mtry, n_trees: 500 }).collect()
        }
        Algorithm::Gbm => {
            let mut g = Vec::new();
            for interaction_depth in [1, 2, 3] {
                for n_trees in [50, 100, 150] {
                    g.push(HyperPoint::Gbm { n_trees, interaction_depth, shrinkage: 0.1, min_obs_in_node: 10 });
                }
            }
            g
        }
        Algorithm::NaiveBayes => {
            let mut g = Vec::new();
            for fl in [0.0, 1.0] {
                for usekernel in [false, true] {
                    g.push(HyperPoint::NaiveBayes { fl, usekernel, adjust: 1.0 });
                }
            }
            g
        }
        Algorithm::Knn => [5, 9, 15, 25, 35].into_iter().map(|k| HyperPoint::Knn { k }).collect(),
    }
}

/// Observes what each resample's recipe was fitted on and what it scored.
pub trait TuneAudit: Sync {
    fn resample(&self, ordinal: usize, recipe_rows: &[u64], assessment_rows: &[u64]);
}

pub struct NoAudit;

impl TuneAudit for NoAudit {
    fn resample(&self, _: usize, _: &[u64], _: &[u64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub point: usize,
    pub resample: usize,
    /// NaN when undefined on this resample.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub point: HyperPoint,
    pub mean: f64,
    pub sd: f64,
    /// Resamples on which the metric was defined.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedResult {
    pub algorithm: Algorithm,
    pub metric: Metric,
    pub grid: Vec<HyperPoint>,
    pub best_index: usize,
    pub best: FittedModel,
    /// One row per (point, resample), point-major.
    pub table: Vec<MetricRow>,
    pub summary: Vec<PointSummary>,
    pub trace: Vec<String>,
}

impl TrainedResult {
    /// Resampled metric of the selected point.
    pub fn resampled_metric(&self) -> f64 {
        self.summary[self.best_index].mean
    }

    pub fn resampled_sd(&self) -> f64 {
        self.summary[self.best_index].sd
    }
}

pub(crate) fn check_outcome(train: &Dataset) -> Result<Vec<f64>> {
    let y = train.outcome()?;
    match train.endpoint_mode() {
        EndpointMode::Classification => {
            train.labels()?;
            if !(y.contains(&0.0) && y.contains(&1.0)) {
                return Err(Error::DegenerateOutcome("only one outcome class in the training data".into()));
            }
        }
        EndpointMode::Regression => {
            let first = y.first().copied().unwrap_or(0.0);
            if y.iter().all(|&v| v == first) {
                return Err(Error::DegenerateOutcome("outcome has zero variance".into()));
            }
        }
    }
    Ok(y)
}

pub fn train_tuned(train: &Dataset, spec: &EstimatorSpec, ctrl: &TrainControl) -> Result<TrainedResult> {
    train_tuned_audited(train, spec, ctrl, &NoAudit)
}

/// Chooses the grid point with the best mean resampled metric; ties (within
/// 1e-12) go to the simplest point. Best point is refit on all rows.
pub fn train_tuned_audited(
    train: &Dataset,
    spec: &EstimatorSpec,
    ctrl: &TrainControl,
    audit: &dyn TuneAudit,
) -> Result<TrainedResult> {
    let mode = train.endpoint_mode();
    ctrl.validate(mode)?;
    check_outcome(train)?;
    if !spec.algorithm.supports(mode) {
        return Err(Error::Config(format!("{} does not support {mode:?}", spec.algorithm)));
    }
    let cfg = ctrl.recipe_config();

    let grid = if spec.grid.is_empty() {
        // Grid definition only; every resample refits its own recipe.
        let recipe = fit_recipe(train, &RecipeConfig { balance: BalanceStrategy::None, ..cfg.clone() }, 0)?;
        let (d, y) = Design::with_outcome(&apply_recipe(&recipe, train, false)?)?;
        default_grid(spec.algorithm, &d, &y, mode)
    } else {
        spec.grid.clone()
    };
    let pairs = ctrl.plan.expand(train.n_rows())?.pairs;

    let per_resample: Vec<Result<Vec<f64>>> = pairs
        .par_iter()
        .enumerate()
        .map(|(r, pair)| {
            let analysis = train.select_rows(&pair.analysis);
            let assessment = train.select_rows(&pair.assessment);
            let recipe = fit_recipe(&analysis, &cfg, ctrl.recipe_seed(Some(r)))?;
            audit.resample(r, recipe.fit_row_ids(), assessment.row_ids());
            let (d, y) = Design::with_outcome(&apply_recipe(&recipe, &analysis, true)?)?;
            let (t, truth) = Design::with_outcome(&apply_recipe(&recipe, &assessment, false)?)?;
            let w = row_weights(&cfg.balance, &y);
            let preds = predict_grid(spec.algorithm, &grid, &d, &y, &w, mode, ctrl.model_seed(Some(r)), &t)?;
            Ok(preds.iter().map(|p| ctrl.metric.score(&clamp(p, mode), &truth)).collect())
        })
        .collect();
    let scores: Vec<Vec<f64>> = per_resample.into_iter().collect::<Result<_>>()?;

    let mut table = Vec::with_capacity(grid.len() * scores.len());
    let mut summary = Vec::with_capacity(grid.len());
    for (g, point) in grid.iter().enumerate() {
        let vals: Vec<f64> = scores.iter().map(|s| s[g]).collect();
        for (r, &value) in vals.iter().enumerate() {
            table.push(MetricRow { point: g, resample: r, value });
        }
        let defined: Vec<f64> = vals.into_iter().filter(|v| v.is_finite()).collect();
        let n = defined.len();
        let mean = if n > 0 { defined.iter().sum::<f64>() / n as f64 } else { f64::NAN };
        let sd = if n > 1 {
            (defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        summary.push(PointSummary { point: *point, mean, sd, n });
    }
    if summary.iter().all(|s| !s.mean.is_finite()) {
        return Err(Error::DegenerateOutcome(format!(
            "{} undefined on every resample (assessment sets hold a single class?)",
            ctrl.metric.name()
        )));
    }

    let best_index = select_best(&summary, ctrl.metric.higher_is_better());
    let mut trace = vec![format!(
        "{}: {} grid points x {} resamples, metric {}",
        spec.algorithm,
        grid.len(),
        scores.len(),
        ctrl.metric.name()
    )];
    for (g, s) in summary.iter().enumerate() {
        trace.push(format!("  [{g}] {}: mean {:.6} sd {:.6} (n={})", s.point, s.mean, s.sd, s.n));
    }
    trace.push(format!("selected [{best_index}] {}", grid[best_index]));

    let best = fit_model(
        train,
        spec.algorithm,
        &grid[best_index],
        &cfg,
        ctrl.recipe_seed(None),
        ctrl.model_seed(None),
    )?;
    Ok(TrainedResult { algorithm: spec.algorithm, metric: ctrl.metric, grid, best_index, best, table, summary, trace })
}

fn clamp(p: &[f64], mode: EndpointMode) -> Vec<f64> {
    match mode {
        EndpointMode::Classification => p.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        EndpointMode::Regression => p.to_vec(),
    }
}

fn select_best(summary: &[PointSummary], higher: bool) -> usize {
    let sign = if higher { 1.0 } else { -1.0 };
    let best_value = summary
        .iter()
        .filter(|s| s.mean.is_finite())
        .map(|s| sign * s.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * best_value.abs().max(1.0);
    (0..summary.len())
        .filter(|&g| summary[g].mean.is_finite() && sign * summary[g].mean >= best_value - tol)
        .min_by(|&a, &b| {
            let (ka, kb) = (summary[a].point.complexity(), summary[b].point.complexity());
            ka.iter()
                .zip(&kb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        })
        .unwrap()
}
