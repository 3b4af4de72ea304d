//! Estimators, solver kernels, grid tuning and prediction.

pub mod design;
mod enet;
mod fitted;
mod forest;
mod gbm;
mod irls;
mod knn;
mod naive_bayes;
mod tree;
mod tune;

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use design::Design;
pub use enet::{elastic_net_solve, log_grid, PenalizedFit};
pub use fitted::{fit_model, predict, FeatureRange, FittedModel, Predictions, RangeBound, FORMAT_VERSION};
pub(crate) use fitted::row_weights as fitted_row_weights;
pub(crate) use tune::check_outcome as tune_check_outcome;
pub use forest::{fit_forest, Forest};
pub use gbm::{gbm_fit, Gbm, GbmParams};
pub use irls::{irls_logistic, irls_logistic_with, IrlsFit, IrlsOptions};
pub use knn::{fit_knn, KnnModel};
pub use naive_bayes::{fit_naive_bayes, nb_posterior, silverman_bandwidth, NaiveBayes, NbFeature, NbParams};
pub use tree::{cart_grow, gini_decrease, grow_tree, Node, Presorted, Tree, TreeParams};
pub use tune::{
    default_grid, train_tuned, train_tuned_audited, EstimatorSpec, Metric, MetricRow, NoAudit, PointSummary,
    TrainControl, TrainedResult, TuneAudit,
};

use crate::data::EndpointMode;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, to_matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    GlmLogistic,
    GlmLinear,
    Ridge,
    Lasso,
    ElasticNet,
    NaiveBayes,
    Knn,
    RandomForest,
    Gbm,
}

impl Algorithm {
    /// Resolves a config key; `glm` picks the link from the endpoint mode.
    pub fn from_key(key: &str, mode: EndpointMode) -> Result<Algorithm> {
        let a = match key {
            "glm" => match mode {
                EndpointMode::Classification => Algorithm::GlmLogistic,
                EndpointMode::Regression => Algorithm::GlmLinear,
            },
            "glm_logistic" => Algorithm::GlmLogistic,
            "glm_linear" | "lm" => Algorithm::GlmLinear,
            "ridge" => Algorithm::Ridge,
            "lasso" => Algorithm::Lasso,
            "enet" | "elastic_net" | "glmnet" => Algorithm::ElasticNet,
            "nb" | "naive_bayes" => Algorithm::NaiveBayes,
            "knn" => Algorithm::Knn,
            "rf" | "random_forest" => Algorithm::RandomForest,
            "gbm" => Algorithm::Gbm,
            other => return Err(Error::Config(format!("unknown model {other:?}"))),
        };
        if !a.supports(mode) {
            return Err(Error::Config(format!("model {key:?} does not support a {mode:?} endpoint")));
        }
        Ok(a)
    }

    pub fn key(self) -> &'static str {
        match self {
            Algorithm::GlmLogistic | Algorithm::GlmLinear => "glm",
            Algorithm::Ridge => "ridge",
            Algorithm::Lasso => "lasso",
            Algorithm::ElasticNet => "enet",
            Algorithm::NaiveBayes => "nb",
            Algorithm::Knn => "knn",
            Algorithm::RandomForest => "rf",
            Algorithm::Gbm => "gbm",
        }
    }

    /// Interpretability order used to break ties between model families.
    pub fn simplicity_rank(self) -> u8 {
        match self {
            Algorithm::GlmLogistic | Algorithm::GlmLinear => 0,
            Algorithm::Ridge | Algorithm::Lasso | Algorithm::ElasticNet => 1,
            Algorithm::NaiveBayes => 2,
            Algorithm::Knn => 3,
            Algorithm::RandomForest => 4,
            Algorithm::Gbm => 5,
        }
    }

    pub fn supports(self, mode: EndpointMode) -> bool {
        match self {
            Algorithm::GlmLogistic | Algorithm::NaiveBayes => mode == EndpointMode::Classification,
            Algorithm::GlmLinear => mode == EndpointMode::Regression,
            _ => true,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HyperPoint {
    Plain,
    Ridge { lambda: f64 },
    Lasso { lambda: f64 },
    ElasticNet { lambda: f64, alpha: f64 },
    RandomForest { mtry: usize, n_trees: usize },
    Gbm { n_trees: usize, interaction_depth: usize, shrinkage: f64, min_obs_in_node: usize },
    NaiveBayes { fl: f64, usekernel: bool, adjust: f64 },
    Knn { k: usize },
}

impl HyperPoint {
    pub fn validate(&self, algorithm: Algorithm, p: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidHyper(m));
        let matches = matches!(
            (algorithm, self),
            (Algorithm::GlmLogistic | Algorithm::GlmLinear, HyperPoint::Plain)
                | (Algorithm::Ridge, HyperPoint::Ridge { .. })
                | (Algorithm::Lasso, HyperPoint::Lasso { .. })
                | (Algorithm::ElasticNet, HyperPoint::ElasticNet { .. })
                | (Algorithm::RandomForest, HyperPoint::RandomForest { .. })
                | (Algorithm::Gbm, HyperPoint::Gbm { .. })
                | (Algorithm::NaiveBayes, HyperPoint::NaiveBayes { .. })
                | (Algorithm::Knn, HyperPoint::Knn { .. })
        );
        if !matches {
            return bad(format!("{self} is not a {algorithm} hyperparameter point"));
        }
        match *self {
            HyperPoint::Ridge { lambda } | HyperPoint::Lasso { lambda } if !(lambda >= 0.0) => {
                bad(format!("lambda must be >= 0, got {lambda}"))
            }
            HyperPoint::ElasticNet { lambda, alpha } if !(lambda >= 0.0 && (0.0..=1.0).contains(&alpha)) => {
                bad(format!("need lambda >= 0 and alpha in [0,1], got {lambda}, {alpha}"))
            }
            HyperPoint::RandomForest { mtry, n_trees } if mtry < 1 || mtry > p || n_trees < 1 => {
                bad(format!("mtry must lie in [1, {p}] and n_trees >= 1, got {mtry}, {n_trees}"))
            }
            HyperPoint::Gbm { n_trees, shrinkage, min_obs_in_node, .. }
                if n_trees < 1 || !(shrinkage > 0.0 && shrinkage <= 1.0) || min_obs_in_node < 1 =>
            {
                bad(format!("gbm needs n_trees >= 1, shrinkage in (0,1], min_obs >= 1; got {self}"))
            }
            HyperPoint::NaiveBayes { fl, adjust, .. } if !(fl >= 0.0 && adjust > 0.0) => {
                bad(format!("naive Bayes needs fL >= 0 and adjust > 0, got {fl}, {adjust}"))
            }
            HyperPoint::Knn { k } if k < 1 => bad("k must be >= 1".into()),
            _ => Ok(()),
        }
    }

    /// Lexicographic key, smaller meaning simpler: fewer trees, larger λ,
    /// smaller depth or k.
    pub fn complexity(&self) -> Vec<f64> {
        match *self {
            HyperPoint::Plain => vec![],
            HyperPoint::Ridge { lambda } | HyperPoint::Lasso { lambda } => vec![-lambda],
            HyperPoint::ElasticNet { lambda, alpha } => vec![-lambda, -alpha],
            HyperPoint::RandomForest { mtry, n_trees } => vec![n_trees as f64, mtry as f64],
            HyperPoint::Gbm { n_trees, interaction_depth, shrinkage, min_obs_in_node } => {
                vec![n_trees as f64, interaction_depth as f64, shrinkage, -(min_obs_in_node as f64)]
            }
            HyperPoint::NaiveBayes { fl, usekernel, adjust } => vec![f64::from(u8::from(usekernel)), fl, adjust],
            HyperPoint::Knn { k } => vec![k as f64],
        }
    }
}

impl fmt::Display for HyperPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            HyperPoint::Plain => write!(f, "default"),
            HyperPoint::Ridge { lambda } | HyperPoint::Lasso { lambda } => write!(f, "lambda={lambda:.6}"),
            HyperPoint::ElasticNet { lambda, alpha } => write!(f, "lambda={lambda:.6} alpha={alpha}"),
            HyperPoint::RandomForest { mtry, n_trees } => write!(f, "mtry={mtry} n_trees={n_trees}"),
            HyperPoint::Gbm { n_trees, interaction_depth, shrinkage, min_obs_in_node } => write!(
                f,
                "n_trees={n_trees} depth={interaction_depth} shrinkage={shrinkage} min_obs={min_obs_in_node}"
            ),
            HyperPoint::NaiveBayes { fl, usekernel, adjust } => {
                write!(f, "fL={fl} usekernel={usekernel} adjust={adjust}")
            }
            HyperPoint::Knn { k } => write!(f, "k={k}"),
        }
    }
}

/// Learned parameters of any supported estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Params {
    Linear { intercept: f64, coef: Vec<f64>, logistic: bool },
    NaiveBayes(NaiveBayes),
    Knn(KnnModel),
    Forest(Forest),
    Gbm(Gbm),
}

impl Params {
    /// Probability of class 1 (classification) or predicted value.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            Params::Linear { intercept, coef, logistic } => {
                let eta = intercept + coef.iter().zip(row).map(|(c, x)| c * x).sum::<f64>();
                if *logistic {
                    design::sigmoid(eta)
                } else {
                    eta
                }
            }
            Params::NaiveBayes(m) => nb_posterior(m, row)[1],
            Params::Knn(m) => m.predict(row),
            Params::Forest(f) => f.predict(row),
            Params::Gbm(g) => g.predict(row),
        }
    }

    /// Model-based feature ranking scores (higher = more important), when the
    /// model has one: standardized coefficient magnitude or impurity decrease.
    pub fn ranking(&self, d: &Design) -> Option<Vec<f64>> {
        match self {
            Params::Linear { coef, .. } => {
                let (_, sd) = d.moments();
                Some(coef.iter().zip(&sd).map(|(c, s)| (c * s).abs()).collect())
            }
            Params::Forest(f) => Some(f.importance.clone()),
            Params::Gbm(g) => Some(g.importance.clone()),
            Params::NaiveBayes(_) | Params::Knn(_) => None,
        }
    }
}

/// Fits one hyperparameter point. Returns the parameters and any solver warnings.
#[allow(clippy::too_many_arguments)]
pub fn fit_params(
    algorithm: Algorithm,
    hyper: &HyperPoint,
    d: &Design,
    y: &[f64],
    w: &[f64],
    mode: EndpointMode,
    seed: u64,
) -> Result<(Params, Vec<String>)> {
    hyper.validate(algorithm, d.p)?;
    if !algorithm.supports(mode) {
        return Err(Error::Config(format!("{algorithm} does not support {mode:?}")));
    }
    if d.n == 0 {
        return Err(Error::TooFewRows("cannot fit on zero rows".into()));
    }
    let logistic = mode == EndpointMode::Classification;
    match *hyper {
        HyperPoint::Plain if algorithm == Algorithm::GlmLogistic => {
            let x = to_matrix(&d.x, d.n, d.p, true);
            let fit = irls_logistic(&x, y, 0.0, Some(w))?;
            Ok((Params::Linear { intercept: fit.coef[0], coef: fit.coef[1..].to_vec(), logistic: true }, fit.warnings))
        }
        HyperPoint::Plain => {
            let mut x = to_matrix(&d.x, d.n, d.p, true);
            let mut yy = DVector::from_column_slice(y);
            for i in 0..d.n {
                let s = w[i].sqrt();
                x.row_mut(i).scale_mut(s);
                yy[i] *= s;
            }
            let (b, fallback) = least_squares(&x, &yy)?;
            let warnings = if fallback {
                vec!["rank-deficient design: least squares regularized with 1e-8 ridge jitter".to_string()]
            } else {
                vec![]
            };
            Ok((Params::Linear { intercept: b[0], coef: b.iter().skip(1).copied().collect(), logistic: false }, warnings))
        }
        HyperPoint::Ridge { lambda } | HyperPoint::Lasso { lambda } | HyperPoint::ElasticNet { lambda, .. } => {
            let alpha = match *hyper {
                HyperPoint::Ridge { .. } => 0.0,
                HyperPoint::Lasso { .. } => 1.0,
                HyperPoint::ElasticNet { alpha, .. } => alpha,
                _ => unreachable!(),
            };
            let st = enet::Standardized::new(d, w);
            let fit = enet::penalized_path(&st, y, logistic, alpha, &[lambda])?.remove(0);
            Ok((Params::Linear { intercept: fit.intercept, coef: fit.coef, logistic }, fit.warnings))
        }
        HyperPoint::NaiveBayes { fl, usekernel, adjust } => {
            Ok((Params::NaiveBayes(fit_naive_bayes(d, y, w, &NbParams { fl, usekernel, adjust })), vec![]))
        }
        HyperPoint::Knn { k } => {
            if k > d.n {
                return Err(Error::KTooLarge { k, n: d.n });
            }
            Ok((Params::Knn(fit_knn(d, y, w, k)), vec![]))
        }
        HyperPoint::RandomForest { mtry, n_trees } => {
            let min_node = if logistic { 1.0 } else { 5.0 };
            Ok((Params::Forest(fit_forest(d, y, w, n_trees, mtry, min_node, seed)), vec![]))
        }
        HyperPoint::Gbm { n_trees, interaction_depth, shrinkage, min_obs_in_node } => {
            let params = GbmParams { n_trees, interaction_depth, shrinkage, min_obs_in_node };
            Ok((Params::Gbm(gbm_fit(d, y, w, &params, logistic, seed)), vec![]))
        }
    }
}

/// Fits every grid point on `train` and predicts `assess`, sharing work
/// between points where the model allows it (λ paths with warm starts, tree
/// ensemble prefixes, one neighbour search for all k). Row `g` of the result
/// holds the predictions of `grid[g]`.
#[allow(clippy::too_many_arguments)]
pub fn predict_grid(
    algorithm: Algorithm,
    grid: &[HyperPoint],
    train: &Design,
    y: &[f64],
    w: &[f64],
    mode: EndpointMode,
    seed: u64,
    assess: &Design,
) -> Result<Vec<Vec<f64>>> {
    for h in grid {
        h.validate(algorithm, train.p)?;
    }
    let logistic = mode == EndpointMode::Classification;
    let rows = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> { (0..assess.n).map(|i| f(assess.row(i))).collect() };
    let mut out: Vec<Option<Vec<f64>>> = vec![None; grid.len()];
    match algorithm {
        Algorithm::Ridge | Algorithm::Lasso | Algorithm::ElasticNet => {
            let st = enet::Standardized::new(train, w);
            let lam_alpha = |h: &HyperPoint| match *h {
                HyperPoint::Ridge { lambda } => (lambda, 0.0),
                HyperPoint::Lasso { lambda } => (lambda, 1.0),
                HyperPoint::ElasticNet { lambda, alpha } => (lambda, alpha),
                _ => unreachable!(),
            };
            let mut alphas: Vec<f64> = grid.iter().map(|h| lam_alpha(h).1).collect();
            alphas.sort_by(f64::total_cmp);
            alphas.dedup();
            for alpha in alphas {
                let mut members: Vec<usize> = (0..grid.len()).filter(|&g| lam_alpha(&grid[g]).1 == alpha).collect();
                members.sort_by(|&a, &b| lam_alpha(&grid[b]).0.total_cmp(&lam_alpha(&grid[a]).0).then(a.cmp(&b)));
                let lambdas: Vec<f64> = members.iter().map(|&g| lam_alpha(&grid[g]).0).collect();
                let fits = enet::penalized_path(&st, y, logistic, alpha, &lambdas)?;
                for (g, fit) in members.into_iter().zip(fits) {
                    let p = Params::Linear { intercept: fit.intercept, coef: fit.coef, logistic };
                    out[g] = Some(rows(&|r| p.predict_row(r)));
                }
            }
        }
        Algorithm::RandomForest => {
            let min_node = if logistic { 1.0 } else { 5.0 };
            let mut done = vec![false; grid.len()];
            for g in 0..grid.len() {
                if done[g] {
                    continue;
                }
                let HyperPoint::RandomForest { mtry, .. } = grid[g] else { unreachable!() };
                let members: Vec<usize> = (g..grid.len())
                    .filter(|&h| matches!(grid[h], HyperPoint::RandomForest { mtry: m, .. } if m == mtry))
                    .collect();
                let max_trees = members
                    .iter()
                    .map(|&h| match grid[h] {
                        HyperPoint::RandomForest { n_trees, .. } => n_trees,
                        _ => 0,
                    })
                    .max()
                    .unwrap();
                let forest = fit_forest(train, y, w, max_trees, mtry, min_node, seed);
                for h in members {
                    let HyperPoint::RandomForest { n_trees, .. } = grid[h] else { unreachable!() };
                    out[h] = Some(rows(&|r| forest.predict_prefix(r, n_trees)));
                    done[h] = true;
                }
            }
        }
        Algorithm::Gbm => {
            let mut done = vec![false; grid.len()];
            for g in 0..grid.len() {
                if done[g] {
                    continue;
                }
                let HyperPoint::Gbm { interaction_depth, shrinkage, min_obs_in_node, .. } = grid[g] else {
                    unreachable!()
                };
                let members: Vec<usize> = (g..grid.len())
                    .filter(|&h| {
                        matches!(grid[h], HyperPoint::Gbm { interaction_depth: d2, shrinkage: s2, min_obs_in_node: m2, .. }
                            if d2 == interaction_depth && s2 == shrinkage && m2 == min_obs_in_node)
                    })
                    .collect();
                let max_trees = members
                    .iter()
                    .map(|&h| match grid[h] {
                        HyperPoint::Gbm { n_trees, .. } => n_trees,
                        _ => 0,
                    })
                    .max()
                    .unwrap();
                let params = GbmParams { n_trees: max_trees, interaction_depth, shrinkage, min_obs_in_node };
                let model = gbm_fit(train, y, w, &params, logistic, seed);
                for h in members {
                    let HyperPoint::Gbm { n_trees, .. } = grid[h] else { unreachable!() };
                    out[h] = Some(rows(&|r| model.predict_prefix(r, n_trees)));
                    done[h] = true;
                }
            }
        }
        Algorithm::Knn => {
            let ks: Vec<usize> = grid
                .iter()
                .map(|h| match *h {
                    HyperPoint::Knn { k } => k,
                    _ => unreachable!(),
                })
                .collect();
            if let Some(&k) = ks.iter().find(|&&k| k > train.n) {
                return Err(Error::KTooLarge { k, n: train.n });
            }
            let model = fit_knn(train, y, w, 1);
            let per_row: Vec<Vec<f64>> = (0..assess.n).map(|i| model.predict_many(assess.row(i), &ks)).collect();
            for g in 0..grid.len() {
                out[g] = Some(per_row.iter().map(|r| r[g]).collect());
            }
        }
        _ => {
            for (g, h) in grid.iter().enumerate() {
                let (p, _) = fit_params(algorithm, h, train, y, w, mode, seed)?;
                out[g] = Some(rows(&|r| p.predict_row(r)));
            }
        }
    }
    Ok(out.into_iter().map(Option::unwrap).collect())
}
