//! Recursive feature elimination with a single up-front ranking per resample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::importance::filter_scores;
use crate::data::{Dataset, EndpointMode};
use crate::error::{Error, Result};
use crate::models::{default_grid, fit_params, Design, EstimatorSpec, HyperPoint, Metric, NoAudit, TuneAudit};
use crate::preprocess::{apply_recipe, fit_recipe, RecipeConfig};
use crate::resample::ResamplingPlan;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeSettings {
    pub spec: EstimatorSpec,
    pub sizes: Vec<usize>,
    pub plan: ResamplingPlan,
    pub recipe: RecipeConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfeProfileRow {
    pub size: usize,
    pub mean: f64,
    pub sd: f64,
    /// Resamples on which the metric was defined.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeTrace {
    pub resample: usize,
    /// Feature names, most important first.
    pub ranking: Vec<String>,
    /// Metric per requested size, in profile order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    pub metric: Metric,
    /// One row per requested size, ascending.
    pub profile: Vec<RfeProfileRow>,
    pub best_size: usize,
    /// Top-ranked features at the best size, from a fit on all training rows.
    pub selected: Vec<String>,
    pub ranking: Vec<String>,
    pub traces: Vec<RfeTrace>,
}

pub fn rfe_run(
    train: &Dataset,
    spec: &EstimatorSpec,
    sizes: &[usize],
    plan: &ResamplingPlan,
    seed: u64,
) -> Result<RfeResult> {
    let settings = RfeSettings {
        spec: spec.clone(),
        sizes: sizes.to_vec(),
        plan: plan.clone(),
        recipe: RecipeConfig::standard(),
        seed,
    };
    rfe_run_audited(train, &settings, &NoAudit)
}

/// `audit` sees, per resample, the rows that ranked the features and the rows
/// the nested subsets were scored on.
pub fn rfe_run_audited(train: &Dataset, s: &RfeSettings, audit: &dyn TuneAudit) -> Result<RfeResult> {
    let mode = train.endpoint_mode();
    let features = train.feature_names();
    let p = features.len();
    let mut sizes = s.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() || sizes[0] == 0 || sizes[sizes.len() - 1] > p {
        return Err(Error::SizesOutOfRange(format!("sizes {:?} must lie in [1, {p}]", s.sizes)));
    }
    if !s.spec.algorithm.supports(mode) {
        return Err(Error::Config(format!("{} does not support {mode:?}", s.spec.algorithm)));
    }
    s.plan.validate()?;
    crate::models::tune_check_outcome(train)?;
    let metric = Metric::for_mode(mode);
    let pairs = s.plan.expand(train.n_rows())?.pairs;

    let per_resample: Vec<Result<RfeTrace>> = pairs
        .par_iter()
        .enumerate()
        .map(|(r, pair)| {
            let analysis = train.select_rows(&pair.analysis);
            let assessment = train.select_rows(&pair.assessment);
            let (recipe_seed, model_seed) = (derive_seed(s.seed, 2 * r as u64), derive_seed(s.seed, 2 * r as u64 + 1));
            let (order, fit_rows) = rank_features(&analysis, s, recipe_seed, model_seed)?;
            audit.resample(r, &fit_rows, assessment.row_ids());
            let ranking: Vec<String> = order.iter().map(|&i| features[i].clone()).collect();
            let values = sizes
                .iter()
                .map(|&size| {
                    let keep = &ranking[..size];
                    let a = analysis.keep_features(keep)?;
                    let t = assessment.keep_features(keep)?;
                    let recipe = fit_recipe(&a, &s.recipe, recipe_seed)?;
                    let (d, y) = Design::with_outcome(&apply_recipe(&recipe, &a, true)?)?;
                    let (td, truth) = Design::with_outcome(&apply_recipe(&recipe, &t, false)?)?;
                    let w = crate::models::fitted_row_weights(&s.recipe.balance, &y);
                    let hyper = point_for(&s.spec, &d, &y, mode);
                    let (params, _) = fit_params(s.spec.algorithm, &hyper, &d, &y, &w, mode, model_seed)?;
                    let preds: Vec<f64> = (0..td.n)
                        .map(|i| {
                            let v = params.predict_row(td.row(i));
                            if mode == EndpointMode::Classification { v.clamp(0.0, 1.0) } else { v }
                        })
                        .collect();
                    Ok(metric.score(&preds, &truth))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(RfeTrace { resample: r, ranking, values })
        })
        .collect();
    let traces: Vec<RfeTrace> = per_resample.into_iter().collect::<Result<_>>()?;

    let profile: Vec<RfeProfileRow> = sizes
        .iter()
        .enumerate()
        .map(|(k, &size)| {
            let vals: Vec<f64> = traces.iter().map(|t| t.values[k]).filter(|v| v.is_finite()).collect();
            let n = vals.len();
            let mean = if n > 0 { vals.iter().sum::<f64>() / n as f64 } else { f64::NAN };
            let sd = if n > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            RfeProfileRow { size, mean, sd, n }
        })
        .collect();
    let best_size = best_size(&profile, metric.higher_is_better())
        .ok_or_else(|| Error::DegenerateOutcome(format!("{} undefined on every resample", metric.name())))?;

    let (order, _) = rank_features(train, s, derive_seed(s.seed, u64::MAX), derive_seed(s.seed, u64::MAX - 1))?;
    let ranking: Vec<String> = order.iter().map(|&i| features[i].clone()).collect();
    Ok(RfeResult { metric, profile, best_size, selected: ranking[..best_size].to_vec(), ranking, traces })
}

/// Best mean metric; ties within 1e-12 go to the smaller size.
fn best_size(profile: &[RfeProfileRow], higher: bool) -> Option<usize> {
    let mut best: Option<&RfeProfileRow> = None;
    for row in profile.iter().filter(|r| r.mean.is_finite()) {
        let better = match best {
            None => true,
            Some(b) if higher => row.mean > b.mean + 1e-12,
            Some(b) => row.mean < b.mean - 1e-12,
        };
        if better {
            best = Some(row);
        }
    }
    best.map(|r| r.size)
}

/// The estimator's grid point for one fit: the first configured point, or the
/// middle of the default grid; `mtry` is capped at the design width.
fn point_for(spec: &EstimatorSpec, d: &Design, y: &[f64], mode: EndpointMode) -> HyperPoint {
    let point = match spec.grid.first() {
        Some(p) => *p,
        None => {
            let g = default_grid(spec.algorithm, d, y, mode);
            g[g.len() / 2]
        }
    };
    match point {
        HyperPoint::RandomForest { mtry, n_trees } => HyperPoint::RandomForest { mtry: mtry.min(d.p).max(1), n_trees },
        other => other,
    }
}

/// Feature indices (into `ds.feature_names()`), most important first, and the
/// row ids the ranking was fitted on.
fn rank_features(ds: &Dataset, s: &RfeSettings, recipe_seed: u64, model_seed: u64) -> Result<(Vec<usize>, Vec<u64>)> {
    let mode = ds.endpoint_mode();
    let features = ds.feature_names();
    let recipe = fit_recipe(ds, &s.recipe, recipe_seed)?;
    let fit_rows = recipe.fit_row_ids().to_vec();
    let (d, y) = Design::with_outcome(&apply_recipe(&recipe, ds, true)?)?;
    let w = crate::models::fitted_row_weights(&s.recipe.balance, &y);
    let hyper = point_for(&s.spec, &d, &y, mode);
    let (params, _) = fit_params(s.spec.algorithm, &hyper, &d, &y, &w, mode, model_seed)?;
    let scores: Vec<f64> = match params.ranking(&d) {
        Some(per_column) => {
            let mut agg = vec![0.0f64; features.len()];
            for (name, v) in d.names.iter().zip(per_column) {
                if let Some(f) = source_feature(&features, name) {
                    agg[f] = agg[f].max(v);
                }
            }
            agg
        }
        None => filter_scores(ds)?.into_iter().map(|(v, _)| v).collect(),
    };
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok((order, fit_rows))
}

/// Raw feature behind a design column; one-hot columns are named `source=level`.
fn source_feature(features: &[String], design_name: &str) -> Option<usize> {
    features.iter().position(|f| f == design_name).or_else(|| {
        let (src, _) = design_name.rsplit_once('=')?;
        features.iter().position(|f| f == src)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSpec, FeatureKind, Role};
    use crate::models::design::sigmoid;
    use crate::models::Algorithm;
    use rand::Rng as _;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Mutex;

    fn planted(n: usize, seed: u64) -> Dataset {
        let mut r = crate::rng::rng_from_seed(seed);
        let mut specs: Vec<ColumnSpec> =
            (0..10).map(|j| ColumnSpec::feature(format!("x{j}"), FeatureKind::Continuous)).collect();
        specs.push(ColumnSpec::new("y", FeatureKind::Binary, Role::Outcome));
        let rows = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..10).map(|_| StandardNormal.sample(&mut r)).collect();
                let eta = 1.0 * x[0] - 1.0 * x[1] + 0.8 * x[2];
                let y = f64::from(u8::from(r.random::<f64>() < sigmoid(eta)));
                x.into_iter().chain([y]).map(Some).collect()
            })
            .collect();
        Dataset::from_rows(specs, rows, EndpointMode::Classification).unwrap()
    }

    fn glm() -> EstimatorSpec {
        EstimatorSpec::new(Algorithm::GlmLogistic, vec![])
    }

    #[test]
    fn profile_rows_match_requested_sizes() {
        let ds = planted(300, 1);
        let res = rfe_run(&ds, &glm(), &(4..=10).collect::<Vec<_>>(), &ResamplingPlan::kfold(3, 1), 1).unwrap();
        assert_eq!(res.profile.len(), 7);
        assert!((4..=10).contains(&res.best_size));
        assert_eq!(res.selected.len(), res.best_size);
        assert!(res.selected.iter().all(|n| ds.feature_names().contains(n)));
    }

    #[test]
    fn out_of_range_sizes_rejected() {
        let ds = planted(100, 2);
        for sizes in [vec![0, 1], vec![11], vec![]] {
            assert!(matches!(
                rfe_run(&ds, &glm(), &sizes, &ResamplingPlan::kfold(3, 1), 1),
                Err(Error::SizesOutOfRange(_))
            ));
        }
    }

    #[test]
    fn single_feature_forced() {
        let ds = planted(200, 3).keep_features(&["x0".to_string()]).unwrap();
        let res = rfe_run(&ds, &glm(), &[1], &ResamplingPlan::kfold(3, 1), 1).unwrap();
        assert_eq!(res.selected, vec!["x0".to_string()]);
    }

    #[test]
    fn planted_features_recovered() {
        let mut hits = 0;
        for seed in 0..10 {
            let ds = planted(500, 100 + seed);
            let res = rfe_run(&ds, &glm(), &(1..=10).collect::<Vec<_>>(), &ResamplingPlan::kfold(5, seed), seed).unwrap();
            hits += usize::from(["x0", "x1", "x2"].iter().all(|f| res.selected.iter().any(|s| s == f)));
        }
        assert!(hits >= 9, "{hits}/10");
    }

    #[test]
    fn model_free_ranking_for_knn_and_impurity_for_forest() {
        let ds = planted(300, 4);
        let sizes: Vec<usize> = (1..=10).collect();
        let knn = EstimatorSpec::new(Algorithm::Knn, vec![HyperPoint::Knn { k: 15 }]);
        let res = rfe_run(&ds, &knn, &sizes, &ResamplingPlan::kfold(3, 4), 4).unwrap();
        assert!(res.ranking[..3].iter().all(|f| ["x0", "x1", "x2"].contains(&f.as_str())));
        let rf = EstimatorSpec::new(Algorithm::RandomForest, vec![HyperPoint::RandomForest { mtry: 3, n_trees: 60 }]);
        let res = rfe_run(&ds, &rf, &[2, 3, 10], &ResamplingPlan::kfold(3, 4), 4).unwrap();
        assert!(res.ranking[..2].iter().all(|f| ["x0", "x1", "x2"].contains(&f.as_str())));
    }

    struct Recorder(Mutex<Vec<(Vec<u64>, Vec<u64>)>>);

    impl TuneAudit for Recorder {
        fn resample(&self, _: usize, fit: &[u64], assess: &[u64]) {
            self.0.lock().unwrap().push((fit.to_vec(), assess.to_vec()));
        }
    }

    #[test]
    fn ranking_rows_never_scored() {
        let ds = planted(200, 5);
        let settings = RfeSettings {
            spec: glm(),
            sizes: vec![2, 5],
            plan: ResamplingPlan::bootstrap(5, 3),
            recipe: RecipeConfig::standard(),
            seed: 9,
        };
        let rec = Recorder(Mutex::new(Vec::new()));
        rfe_run_audited(&ds, &settings, &rec).unwrap();
        let seen = rec.0.into_inner().unwrap();
        assert_eq!(seen.len(), 5);
        for (fit, assess) in seen {
            assert!(fit.iter().all(|id| !assess.contains(id)));
        }
    }

    #[test]
    fn tie_goes_to_smaller_size() {
        let row = |size, mean| RfeProfileRow { size, mean, sd: 0.0, n: 3 };
        assert_eq!(best_size(&[row(2, 0.8), row(3, 0.8), row(4, 0.7)], true), Some(2));
        assert_eq!(best_size(&[row(2, 1.5), row(3, 1.2), row(4, 1.2)], false), Some(3));
    }
}
