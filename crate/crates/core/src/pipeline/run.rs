//! The end-to-end run: split, optional RFE, tuned training per model,
//! comparison, final-model freeze, then a single look at the test rows.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{CutoffPolicy, PipelineConfig};
use super::persist::ModelFile;
use crate::data::{
    class_balance_check, generate_synthetic_cohort, load_csv, split_train_test, BalanceCheck, ColumnSpec, Dataset,
    EndpointMode, FeatureKind, GeneratorSpec, SplitPair,
};
use crate::error::{Error, Result};
use crate::eval::{
    auc, calibration_curve, calibration_report, confusion_at, discrimination_report, optimal_cutoff, overfit_gap,
    qq_points, regression_report, roc_curve, CalibrationBin, GapKind, RocPoint,
};
use crate::models::{predict, Algorithm, FittedModel, Metric, Predictions, TrainedResult, TuneAudit};
use crate::select::{rfe_run_audited, variable_importance, ImportanceReport, RfeResult, RfeSettings};

/// Calibration bins in reports and plots.
pub const CALIBRATION_GROUPS: usize = 10;
const CURVE_POINTS: usize = 101;
const QQ_POINTS: usize = 100;
const TIE_TOLERANCE: f64 = 1e-12;

/// Observable steps of a run, for auditing the order of data access.
#[derive(Debug, Clone, PartialEq)]
pub enum RunEvent {
    Split { train_rows: Vec<u64>, test_rows: Vec<u64> },
    /// A recipe fitted inside a resample of `stage` (`rfe` or a model key).
    ResampleFit { stage: String, ordinal: usize, recipe_rows: Vec<u64>, assessment_rows: Vec<u64> },
    /// The final model's recipe was fitted on these rows.
    FinalFit { recipe_rows: Vec<u64> },
    FinalModelFrozen,
    TestAccessed,
}

pub trait RunObserver: Sync {
    fn event(&self, e: RunEvent);
}

pub struct NoObserver;

impl RunObserver for NoObserver {
    fn event(&self, _: RunEvent) {}
}

struct StageAudit<'a> {
    stage: String,
    observer: &'a dyn RunObserver,
}

impl TuneAudit for StageAudit<'_> {
    fn resample(&self, ordinal: usize, recipe_rows: &[u64], assessment_rows: &[u64]) {
        self.observer.event(RunEvent::ResampleFit {
            stage: self.stage.clone(),
            ordinal,
            recipe_rows: recipe_rows.to_vec(),
            assessment_rows: assessment_rows.to_vec(),
        });
    }
}

/// Test rows, readable only with proof of a frozen final model.
struct SealedTest(Dataset);

/// A final model whose parameters and cutoff can no longer change.
pub struct Frozen(FittedModel);

impl SealedTest {
    fn open(self, _proof: &Frozen, observer: &dyn RunObserver) -> Dataset {
        observer.event(RunEvent::TestAccessed);
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: String,
    /// `None` when undefined (reported as `NA`).
    pub value: Option<f64>,
}

fn mv(name: &str, value: impl Into<Option<f64>>) -> MetricValue {
    MetricValue { name: name.to_string(), value: value.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    /// Selected grid point.
    pub hyper: String,
    pub mean: f64,
    pub sd: f64,
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub model: String,
    pub point: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub metric: String,
    pub train: f64,
    pub test: f64,
    pub gap: f64,
    pub threshold: f64,
    pub flagged: bool,
}

/// Metrics and plot data for one evaluation cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n: usize,
    pub metrics: Vec<MetricValue>,
    pub roc: Vec<RocPoint>,
    pub calibration_bins: Vec<CalibrationBin>,
    pub calibration_curve: Vec<(f64, f64)>,
    pub qq: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

impl Evaluation {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).and_then(|m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSection {
    pub n_train: usize,
    pub n_test: usize,
    pub features: Vec<String>,
    pub rfe: Option<RfeResult>,
    pub comparison: Vec<ComparisonRow>,
    pub tuning: Vec<TuningRow>,
    pub selected: String,
    pub cutoff: Option<f64>,
    /// Final model on the training rows: resampled and apparent.
    pub metrics: Vec<MetricValue>,
    pub gaps: Vec<GapRow>,
    pub importance: ImportanceReport,
}

impl TrainingSection {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).and_then(|m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: EndpointMode,
    pub outcome: String,
    pub metric: Metric,
    /// Absent for evaluate-only runs.
    pub training: Option<TrainingSection>,
    pub test: Evaluation,
    pub notes: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub model: ModelFile,
}

/// Loads or generates the configured cohort with the endpoint applied.
pub fn load_dataset(cfg: &PipelineConfig) -> Result<Dataset> {
    let ds = match (&cfg.data.input, &cfg.data.generate) {
        (Some(path), None) => load_with_categoricals(path, &cfg.data.categorical)?,
        (None, Some(g)) => {
            let spec = g.spec.clone().unwrap_or_else(GeneratorSpec::default);
            generate_synthetic_cohort(g.n, cfg.generator_seed(), &spec)?
        }
        _ => return Err(Error::Config("data needs exactly one of `input` or `generate`".into())),
    };
    let ds = ds.with_outcome(&cfg.endpoint.name, cfg.endpoint.mode)?.ignore_columns(&cfg.endpoint.ignore)?;
    ds.validate()?;
    if ds.feature_indices().is_empty() {
        return Err(Error::Config("no feature columns left after ignoring".into()));
    }
    Ok(ds)
}

fn load_with_categoricals(path: &Path, categorical: &[String]) -> Result<Dataset> {
    let raw = load_csv(path, None)?;
    if categorical.is_empty() {
        return Ok(raw);
    }
    let mut schema = Vec::new();
    for name in categorical {
        let c = raw.column_index(name)?;
        let mut levels = Vec::new();
        for v in raw.observed(c) {
            if v.fract() != 0.0 {
                return Err(Error::SchemaMismatch(format!("categorical column {name:?} holds non-integer {v}")));
            }
            levels.push(v as i64);
        }
        levels.sort_unstable();
        levels.dedup();
        schema.push(ColumnSpec::feature(name.clone(), FeatureKind::Categorical { levels }));
    }
    load_csv(path, Some(&schema))
}

/// Runs the configured pipeline in memory; nothing is written.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<RunOutput> {
    cmd_run_observed(cfg, &NoObserver)
}

pub fn cmd_run_observed(cfg: &PipelineConfig, observer: &dyn RunObserver) -> Result<RunOutput> {
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(cfg, observer))
}

fn run_inner(cfg: &PipelineConfig, observer: &dyn RunObserver) -> Result<RunOutput> {
    let mode = cfg.endpoint.mode;
    let metric = cfg.metric();
    let ds = load_dataset(cfg)?;
    let mut notes = Vec::new();

    let pair = split_train_test(&ds, cfg.split.fraction, cfg.split_seed())?;
    observer.event(RunEvent::Split {
        train_rows: pair.train.row_ids().to_vec(),
        test_rows: pair.test.row_ids().to_vec(),
    });
    let (n_train, n_test) = (pair.train.n_rows(), pair.test.n_rows());
    let sealed = SealedTest(pair.test);
    let full_train = pair.train;
    let mut train = full_train.clone();

    let ctrl = cfg.train_control();
    let rfe = match cfg.rfe.as_ref().filter(|r| r.enabled) {
        Some(r) => {
            let settings = RfeSettings {
                spec: crate::models::EstimatorSpec::new(Algorithm::from_key(&r.estimator, mode)?, r.grid.clone()),
                sizes: r.sizes.expand(),
                plan: r.plan,
                recipe: ctrl.recipe_config(),
                seed: cfg.rfe_seed(),
            };
            let audit = StageAudit { stage: "rfe".into(), observer };
            let result = rfe_run_audited(&train, &settings, &audit)?;
            train = train.keep_features(&result.selected)?;
            Some(result)
        }
        None => None,
    };

    let mut results: Vec<TrainedResult> = Vec::new();
    for spec in cfg.estimators()? {
        let audit = StageAudit { stage: spec.algorithm.key().to_string(), observer };
        results.push(crate::models::train_tuned_audited(&train, &spec, &ctrl, &audit)?);
    }
    let (chosen, tie_note) = choose_final(&results, metric.higher_is_better());
    notes.extend(tie_note);
    let result = &results[chosen];
    observer.event(RunEvent::FinalFit { recipe_rows: result.best.recipe.fit_row_ids().to_vec() });

    // Cutoff and training metrics come from the training rows only.
    let train_pred = predict(&result.best, &train)?;
    let mut model = result.best.clone();
    let mut train_metrics = vec![
        mv(&format!("{}_resampled", metric.name()), result.resampled_metric()),
        mv(&format!("{}_resampled_sd", metric.name()), result.resampled_sd()),
    ];
    let cutoff = match mode {
        EndpointMode::Classification => {
            let labels = train.labels()?;
            let c = match cfg.cutoff {
                CutoffPolicy::Fixed { value } => value,
                policy => optimal_cutoff(&train_pred.values, &labels, policy.search_mode().expect("data-driven"))?,
            };
            // Cutoffs at the 0/1 candidates are nudged into the open interval.
            let c = c.clamp(1e-9, 1.0 - 1e-9);
            model = model.with_cutoff(c)?;
            train_metrics.extend(classification_metrics(&train_pred.values, &labels, c, &mut Vec::new())?);
            Some(c)
        }
        EndpointMode::Regression => {
            let truth = train.outcome()?;
            train_metrics.extend(regression_metrics(&train_pred.values, &truth)?);
            None
        }
    };
    let importance = variable_importance(&train)?;
    let frozen = Frozen(model);
    observer.event(RunEvent::FinalModelFrozen);

    let test = sealed.open(&frozen, observer);
    let (evaluation, _) = evaluate(&frozen.0, &test)?;
    let split = SplitPair { train: full_train, test, fraction: cfg.split.fraction, seed: cfg.split_seed() };
    match class_balance_check(&split)? {
        BalanceCheck::Classification { train_positive, test_positive, warning: true, .. } => notes.push(format!(
            "outcome prevalence differs between partitions: train {train_positive:.4}, test {test_positive:.4}"
        )),
        BalanceCheck::Regression { train_mean, test_mean, warning: true, .. } => notes.push(format!(
            "outcome mean differs between partitions: train {train_mean:.4}, test {test_mean:.4}"
        )),
        _ => {}
    }

    let resampled = result.resampled_metric();
    let gaps = match mode {
        EndpointMode::Classification => evaluation.metric("auc").map(|t| (t, GapKind::HigherIsBetter)),
        EndpointMode::Regression => evaluation.metric("rmse").map(|t| (t, GapKind::LowerIsBetter)),
    }
    .map(|(test_value, kind)| {
        let g = overfit_gap(resampled, test_value, kind, None);
        if g.flagged {
            notes.push(format!("possible overfitting: {} train {resampled:.4} vs test {test_value:.4}", metric.name()));
        }
        vec![GapRow {
            metric: metric.name().to_string(),
            train: resampled,
            test: test_value,
            gap: g.gap,
            threshold: g.threshold,
            flagged: g.flagged,
        }]
    })
    .unwrap_or_default();

    let comparison = results
        .iter()
        .map(|r| ComparisonRow {
            model: r.algorithm.key().to_string(),
            hyper: r.grid[r.best_index].to_string(),
            mean: r.resampled_metric(),
            sd: r.resampled_sd(),
            resamples: r.summary[r.best_index].n,
        })
        .collect();
    let tuning = results
        .iter()
        .flat_map(|r| {
            r.summary.iter().map(move |s| TuningRow {
                model: r.algorithm.key().to_string(),
                point: s.point.to_string(),
                mean: s.mean,
                sd: s.sd,
            })
        })
        .collect();
    let selected = result.algorithm.key().to_string();
    notes.extend(frozen.0.warnings.iter().map(|w| format!("{selected}: {w}")));

    let report = RunReport {
        mode,
        outcome: cfg.endpoint.name.clone(),
        metric,
        training: Some(TrainingSection {
            n_train,
            n_test,
            features: train.feature_names(),
            rfe,
            comparison,
            tuning,
            selected,
            cutoff,
            metrics: train_metrics.clone(),
            gaps,
            importance,
        }),
        test: evaluation,
        notes,
    };
    let training_metrics = train_metrics.into_iter().filter_map(|m| Some((m.name, m.value?))).collect();
    Ok(RunOutput { report, model: ModelFile { model: frozen.0, training_metrics } })
}

/// Index of the final model: best resampled metric, ties to the simpler family.
fn choose_final(results: &[TrainedResult], higher: bool) -> (usize, Option<String>) {
    let score = |r: &TrainedResult| if higher { r.resampled_metric() } else { -r.resampled_metric() };
    let best = results.iter().map(score).filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..results.len()).filter(|&i| score(&results[i]) >= best - TIE_TOLERANCE).collect();
    let chosen = *tied
        .iter()
        .min_by_key(|&&i| (results[i].algorithm.simplicity_rank(), i))
        .expect("at least one finite metric");
    let note = (tied.len() > 1).then(|| {
        let names: Vec<&str> = tied.iter().map(|&i| results[i].algorithm.key()).collect();
        format!(
            "models {} tie on the training metric; chose {} as the most interpretable",
            names.join(", "),
            results[chosen].algorithm.key()
        )
    });
    (chosen, note)
}

fn classification_metrics(
    probs: &[f64],
    labels: &[u8],
    cutoff: f64,
    notes: &mut Vec<String>,
) -> Result<Vec<MetricValue>> {
    let a = auc(probs, labels)?;
    let d = discrimination_report(&confusion_at(probs, labels, cutoff), a, cutoff);
    let mut out = vec![
        mv("auc", a),
        mv("cutoff", cutoff),
        mv("accuracy", d.accuracy),
        mv("sensitivity", d.sensitivity),
        mv("specificity", d.specificity),
        mv("ppv", d.ppv),
        mv("npv", d.npv),
        mv("f1", d.f1),
    ];
    match calibration_report(probs, labels, CALIBRATION_GROUPS) {
        Ok(c) => out.extend([
            mv("calibration_intercept", c.intercept),
            mv("calibration_slope", c.slope),
            mv("brier", c.brier),
            mv("eo_ratio", c.eo_ratio),
            mv("eci", c.eci),
            mv("hl_statistic", c.hl_stat),
            mv("hl_p", c.hl_p),
        ]),
        Err(e) => notes.push(format!("calibration not computed: {e}")),
    }
    Ok(out)
}

fn regression_metrics(preds: &[f64], truth: &[f64]) -> Result<Vec<MetricValue>> {
    let r = regression_report(preds, truth)?;
    Ok(vec![mv("rmse", r.rmse), mv("mae", r.mae), mv("r2", r.r2)])
}

/// Scores `model` on a labelled cohort: the one-shot test evaluation of a
/// run, or an external validation of a saved model.
pub fn evaluate(model: &FittedModel, ds: &Dataset) -> Result<(Evaluation, Predictions)> {
    let pred = predict(model, ds)?;
    let mut notes = Vec::new();
    let imputed_rows = pred.imputed.iter().filter(|r| !r.is_empty()).count();
    if imputed_rows > 0 {
        notes.push(format!("{imputed_rows} rows had missing inputs imputed"));
    }
    let extrapolated = pred.extrapolation.iter().filter(|r| !r.is_empty()).count();
    if extrapolated > 0 {
        notes.push(format!("{extrapolated} rows lie outside the training range of at least one feature"));
    }
    let evaluation = match model.mode {
        EndpointMode::Classification => {
            let labels = ds.labels()?;
            let metrics = classification_metrics(&pred.values, &labels, model.cutoff, &mut notes)?;
            let calibration_bins = match crate::eval::calibration_bins(&pred.values, &labels, CALIBRATION_GROUPS) {
                Ok(b) => b,
                Err(_) => Vec::new(),
            };
            Evaluation {
                n: ds.n_rows(),
                metrics,
                roc: roc_curve(&pred.values, &labels)?,
                calibration_bins,
                calibration_curve: calibration_curve(&pred.values, &labels, CURVE_POINTS),
                qq: Vec::new(),
                notes,
            }
        }
        EndpointMode::Regression => {
            let truth = ds.outcome()?;
            Evaluation {
                n: ds.n_rows(),
                metrics: regression_metrics(&pred.values, &truth)?,
                roc: Vec::new(),
                calibration_bins: Vec::new(),
                calibration_curve: Vec::new(),
                qq: qq_points(&pred.values, &truth, QQ_POINTS),
                notes,
            }
        }
    };
    Ok((evaluation, pred))
}

/// External validation of a saved model on a labelled CSV.
pub fn cmd_evaluate(file: &ModelFile, csv: &Path) -> Result<RunReport> {
    let model = &file.model;
    let ds = load_csv(csv, None)?.with_outcome(&model.outcome, model.mode)?;
    let (test, _) = evaluate(model, &ds)?;
    Ok(RunReport {
        mode: model.mode,
        outcome: model.outcome.clone(),
        metric: Metric::for_mode(model.mode),
        training: None,
        test,
        notes: vec![format!("evaluate-only: {} model applied to {}", model.algorithm.key(), csv.display())],
    })
}

/// Applies a saved model to an unlabelled (or labelled) CSV.
pub fn cmd_predict(file: &ModelFile, csv: &Path) -> Result<Predictions> {
    let ds = load_csv(csv, None)?;
    predict(&file.model, &ds)
}
