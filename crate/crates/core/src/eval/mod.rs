//! Discrimination, calibration and regression metrics; recalibration and
//! generalization diagnostics. Everything here is a pure function.

mod calibration;
mod diagnostics;
mod discrimination;
pub mod gamma;
mod recalibrate;
mod regression;

pub use calibration::{calibration_bins, calibration_curve, calibration_report, hosmer_lemeshow, CalibrationBin, CalibrationReport, HosmerLemeshow};
pub use diagnostics::{extrapolation_flags, overfit_gap, GapKind, OverfitGap};
pub use discrimination::{
    auc, confusion_at, discrimination_report, optimal_cutoff, roc_curve, ConfusionMatrix, CutoffMode,
    DiscriminationReport, RocPoint,
};
pub use recalibrate::{apply_recalibrator, fit_recalibrator, pava, RecalibrationMethod, Recalibrator};
pub use regression::{qq_points, regression_report, RegressionReport};
