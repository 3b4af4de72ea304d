//! Clinical prediction modeling toolkit.

pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod resample;
pub mod rng;
pub mod select;

pub use error::{Error, Result};
