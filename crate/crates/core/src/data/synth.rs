//! Synthetic glioblastoma cohort.
//!
//! Marginals follow the published cohort profile: 13 binary indicators with
//! fixed prevalences and 7 Gaussian measurements with fixed mean and sd. The
//! features are independent. Survival is a rescaled linear predictor over the
//! standardized features plus Gaussian noise; `TwelveMonths` thresholds it.
//!
//! Sampling is moment-matched: a binary column holds exactly
//! `round(prevalence * n)` ones in a seeded random arrangement, and each
//! Gaussian column is standardized in-sample before being mapped to its target
//! mean and sd (and clamped to its physical bounds). Survival is likewise
//! rescaled to exactly its target mean and sd.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ColumnSpec, Dataset, EndpointMode, FeatureKind, Role};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Marginal {
    Bernoulli { prevalence: f64 },
    Gaussian { mean: f64, sd: f64, lower: Option<f64>, upper: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub marginal: Marginal,
    /// Effect on survival per standardized unit.
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub variables: Vec<VariableSpec>,
    pub noise_sd: f64,
    pub survival_mean: f64,
    pub survival_sd: f64,
    pub survival_floor: f64,
    pub threshold: f64,
}

fn bern(name: &str, prevalence: f64, coefficient: f64) -> VariableSpec {
    VariableSpec { name: name.into(), marginal: Marginal::Bernoulli { prevalence }, coefficient }
}

fn gauss(name: &str, mean: f64, sd: f64, lower: Option<f64>, upper: Option<f64>, coefficient: f64) -> VariableSpec {
    VariableSpec { name: name.into(), marginal: Marginal::Gaussian { mean, sd, lower, upper }, coefficient }
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            variables: vec![
                bern("IDH", 0.414, 0.80),
                bern("MGMT", 0.562, 0.60),
                bern("TERTp", 0.511, -0.40),
                bern("Male", 0.487, 0.0),
                bern("Midline", 0.260, -0.50),
                bern("Comorbidity", 0.514, -0.30),
                bern("Epilepsy", 0.331, 0.20),
                bern("PriorSurgery", 0.528, 0.0),
                bern("Married", 0.548, 0.0),
                bern("ActiveWorker", 0.546, 0.25),
                bern("Chemotherapy", 0.408, 0.70),
                bern("HigherEducation", 0.421, 0.0),
                gauss("Caseload", 165.0, 38.7, Some(1.0), None, 0.30),
                gauss("Age", 66.0, 6.2, None, None, -0.60),
                gauss("RadiotherapyDose", 24.8, 6.7, Some(0.0), None, 0.50),
                gauss("KPS", 70.5, 8.0, Some(0.0), Some(100.0), 0.90),
                gauss("Income", 268_052.0, 62_867.0, None, None, 0.0),
                gauss("Height", 174.6, 6.7, None, None, 0.0),
                gauss("BMI", 0.02, 1.0, None, None, 0.0),
                gauss("Size", 2.98, 0.55, Some(0.01), None, -0.45),
            ],
            noise_sd: 1.51,
            // 12.14 rounds to the published 12.1 and puts P(Survival >= 12) at 0.518.
            survival_mean: 12.14,
            survival_sd: 3.1,
            survival_floor: 0.1,
            threshold: 12.0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sd > 0.0) {
            return Err(Error::InvalidSpec(format!("noise sd must be > 0, got {}", self.noise_sd)));
        }
        if !(self.survival_sd > self.noise_sd) {
            return Err(Error::InvalidSpec("survival sd must exceed noise sd".into()));
        }
        for v in &self.variables {
            match v.marginal {
                Marginal::Bernoulli { prevalence } if !(prevalence > 0.0 && prevalence < 1.0) => {
                    return Err(Error::InvalidSpec(format!("{}: prevalence {prevalence} outside (0,1)", v.name)));
                }
                Marginal::Gaussian { sd, .. } if !(sd > 0.0) => {
                    return Err(Error::InvalidSpec(format!("{}: sd must be > 0", v.name)));
                }
                _ => {}
            }
        }
        if self.variables.iter().all(|v| v.coefficient == 0.0) {
            return Err(Error::InvalidSpec("at least one coefficient must be nonzero".into()));
        }
        Ok(())
    }
}

fn standardize_in_place(z: &mut [f64]) {
    let n = z.len();
    if n < 2 {
        return;
    }
    let m = z.iter().sum::<f64>() / n as f64;
    let s = (z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if s > 0.0 {
        z.iter_mut().for_each(|v| *v = (*v - m) / s);
    }
}

/// Columns: every spec variable in order, then `Survival`, then `TwelveMonths`
/// (designated outcome).
pub fn generate_synthetic_cohort(n: usize, seed: u64, spec: &GeneratorSpec) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidSpec("cohort size must be >= 1".into()));
    }
    spec.validate()?;

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(spec.variables.len() + 2);
    let mut specs = Vec::with_capacity(spec.variables.len() + 2);
    let mut linear = vec![0.0; n];
    let mut beta_sq = 0.0;

    for (j, var) in spec.variables.iter().enumerate() {
        let mut r = rng::stream(seed, j as u64);
        let (col, kind, center, scale) = match var.marginal {
            Marginal::Bernoulli { prevalence } => {
                let ones = (prevalence * n as f64).round() as usize;
                let mut col: Vec<f64> = (0..n).map(|i| if i < ones { 1.0 } else { 0.0 }).collect();
                col.shuffle(&mut r);
                (col, FeatureKind::Binary, prevalence, (prevalence * (1.0 - prevalence)).sqrt())
            }
            Marginal::Gaussian { mean, sd, lower, upper } => {
                let mut z: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
                standardize_in_place(&mut z);
                let col = z
                    .into_iter()
                    .map(|z| {
                        let mut x = mean + sd * z;
                        if let Some(lo) = lower {
                            x = x.max(lo);
                        }
                        if let Some(hi) = upper {
                            x = x.min(hi);
                        }
                        x
                    })
                    .collect();
                (col, FeatureKind::Continuous, mean, sd)
            }
        };
        if var.coefficient != 0.0 {
            for (acc, x) in linear.iter_mut().zip(&col) {
                *acc += var.coefficient * (x - center) / scale;
            }
            beta_sq += var.coefficient * var.coefficient;
        }
        columns.push(col);
        specs.push(ColumnSpec::feature(var.name.clone(), kind));
    }

    let signal_scale = (spec.survival_sd.powi(2) - spec.noise_sd.powi(2)).sqrt() / beta_sq.sqrt();
    let mut noise_rng = rng::stream(seed, 1_000_003);
    let mut survival: Vec<f64> = linear
        .iter()
        .map(|lp| {
            let e: f64 = noise_rng.sample(StandardNormal);
            signal_scale * lp + spec.noise_sd * e
        })
        .collect();
    if n >= 2 {
        standardize_in_place(&mut survival);
        survival.iter_mut().for_each(|s| *s = spec.survival_mean + spec.survival_sd * *s);
    } else {
        survival.iter_mut().for_each(|s| *s += spec.survival_mean);
    }
    survival.iter_mut().for_each(|s| *s = s.max(spec.survival_floor));
    let twelve: Vec<f64> = survival.iter().map(|&s| if s >= spec.threshold { 1.0 } else { 0.0 }).collect();

    columns.push(survival);
    specs.push(ColumnSpec::new("Survival", FeatureKind::Continuous, Role::Ignored));
    columns.push(twelve);
    specs.push(ColumnSpec::new("TwelveMonths", FeatureKind::Binary, Role::Outcome));

    Dataset::from_columns(specs, &columns, EndpointMode::Classification)
}
