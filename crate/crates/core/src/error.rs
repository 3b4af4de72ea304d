use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// Variants are grouped by the exit code the CLI maps them to: configuration
/// problems, data problems, and numeric failures.
#[derive(Debug, Error)]
pub enum Error {
    // --- configuration ---
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("incidence must lie strictly between 0 and 1, got {0}")]
    InvalidIncidence(f64),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
    #[error("k = {k} is too large for n = {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("RFE sizes out of range: {0}")]
    SizesOutOfRange(String),
    #[error("cutoff target {target} cannot be achieved")]
    TargetUnachievable { target: f64 },

    // --- data ---
    #[error("{path}: missing header row")]
    MissingHeader { path: PathBuf },
    #[error("no data rows")]
    MissingData,
    #[error("non-numeric cell {value:?} at row {row}, column {column:?}")]
    NonNumericCell { row: usize, column: String, value: String },
    #[error("duplicate column name {0:?}")]
    DuplicateColumnName(String),
    #[error("column {0:?} not found")]
    MissingColumn(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("column {0:?} is not continuous")]
    NonContinuousColumn(String),
    #[error("partition would be empty (train size {train} of {n})")]
    EmptyPartition { train: usize, n: usize },
    #[error("too few rows: {0}")]
    TooFewRows(String),
    #[error("column {column:?} has only {observed} observed donors, need {k}")]
    TooFewDonors { column: String, observed: usize, k: usize },
    #[error("only one outcome class present")]
    SingleClass,
    #[error("SMOTE needs more than k = {k} minority rows, found {minority}")]
    SmoteTooFewMinority { k: usize, minority: usize },
    #[error("outcome is degenerate: {0}")]
    DegenerateOutcome(String),
    #[error("model format version {found} is not supported (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("model file checksum mismatch (stored {stored}, computed {computed})")]
    ChecksumMismatch { stored: String, computed: String },
    #[error("malformed model file: {0}")]
    MalformedModel(String),

    // --- numeric ---
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Config(_) | InvalidSpec(_) | InvalidIncidence(_) | InvalidHyper(_) | KTooLarge { .. }
            | SizesOutOfRange(_) | TargetUnachievable { .. } => 2,
            SingularSystem(_) | NonConvergence { .. } => 4,
            _ => 3,
        }
    }
}
