//! Batch pipeline behind the command-line tool: configuration, the end-to-end
//! run, model files, and report emission.

mod config;
mod persist;
mod report;
mod run;
pub mod svg;

pub use config::{
    CutoffPolicy, DataSource, EndpointConfig, GenerateRequest, ModelEntry, PipelineConfig, RfeConfig, SizeSpec,
    SplitConfig, TrainConfig,
};
pub use persist::{decode_model, encode_model, model_load, model_save, ModelFile};
pub use report::{
    emit_report, load_report, predictions_csv, render_report, write_evaluation, write_run, ManifestEntry,
    MANIFEST_FILE, MODEL_FILE, REPORT_FILE,
};
pub use run::{
    cmd_evaluate, cmd_predict, cmd_run, cmd_run_observed, evaluate, load_dataset, ComparisonRow, Evaluation, Frozen,
    GapRow, MetricValue, NoObserver, RunEvent, RunObserver, RunOutput, RunReport, TrainingSection, TuningRow,
    CALIBRATION_GROUPS,
};
