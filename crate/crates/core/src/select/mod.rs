//! Feature selection and reduction: recursive feature elimination, PCA, and
//! model-free variable importance.

mod importance;
mod pca;
mod rfe;

pub use importance::{variable_importance, ImportanceEntry, ImportanceReport};
pub use pca::{pca_fit, pca_inverse_transform, pca_standardize, pca_transform, PcaModel};
pub use rfe::{rfe_run, rfe_run_audited, RfeProfileRow, RfeResult, RfeSettings, RfeTrace};
