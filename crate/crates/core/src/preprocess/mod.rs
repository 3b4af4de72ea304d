//! Preprocessing fitted on training rows only: kNN imputation, one-hot
//! encoding, scaling, class rebalancing, and their composition as a [`Recipe`].

mod balance;
pub mod distance;
mod knn_impute;
mod onehot;
mod recipe;
mod scaler;

pub use balance::{rebalance, smote_interpolate, BalanceStrategy};
pub use distance::MixedDistance;
pub use knn_impute::{fit_knn_imputer, impute, impute_with_report, KnnImputer};
pub use onehot::{level_column_name, one_hot_encode, OneHotMap};
pub use recipe::{apply_recipe, apply_recipe_detailed, fingerprint_rows, fit_recipe, Applied, Recipe, RecipeConfig};
pub use scaler::{apply_scaler, fit_scaler, ScaleMode, ScaledColumn, Scaler};
