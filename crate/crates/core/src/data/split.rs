use rand::seq::SliceRandom;
use serde::Serialize;

use super::{Dataset, EndpointMode};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub fraction: f64,
    pub seed: u64,
}

/// Unstratified shuffle-then-cut split; `|train| = floor(fraction * n)`.
pub fn split_train_test(ds: &Dataset, fraction: f64, seed: u64) -> Result<SplitPair> {
    let n = ds.n_rows();
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction must be in (0,1), got {fraction}")));
    }
    if n < 2 {
        return Err(Error::TooFewRows(format!("cannot split {n} rows")));
    }
    let n_train = (fraction * n as f64 + 1e-9).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::EmptyPartition { train: n_train, n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, 0));
    let (train_idx, test_idx) = idx.split_at(n_train);
    let mut train_idx = train_idx.to_vec();
    let mut test_idx = test_idx.to_vec();
    train_idx.shuffle(&mut rng::stream(seed, 1));
    test_idx.shuffle(&mut rng::stream(seed, 2));
    Ok(SplitPair { train: ds.select_rows(&train_idx), test: ds.select_rows(&test_idx), fraction, seed })
}

/// Post-hoc comparison of the outcome distribution across partitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BalanceCheck {
    Classification { train_positive: f64, test_positive: f64, difference: f64, warning: bool },
    Regression { train_mean: f64, train_sd: f64, test_mean: f64, test_sd: f64, warning: bool },
}

impl BalanceCheck {
    pub fn warning(&self) -> bool {
        match self {
            BalanceCheck::Classification { warning, .. } | BalanceCheck::Regression { warning, .. } => *warning,
        }
    }
}

const PROPORTION_TOLERANCE: f64 = 0.05;
const MEAN_TOLERANCE_SD: f64 = 0.5;

pub fn class_balance_check(pair: &SplitPair) -> Result<BalanceCheck> {
    let ytr = pair.train.outcome()?;
    let yte = pair.test.outcome()?;
    Ok(match pair.train.endpoint_mode() {
        EndpointMode::Classification => {
            let ptr = mean(&ytr);
            let pte = mean(&yte);
            let difference = (ptr - pte).abs();
            BalanceCheck::Classification {
                train_positive: ptr,
                test_positive: pte,
                difference,
                warning: difference > PROPORTION_TOLERANCE,
            }
        }
        EndpointMode::Regression => {
            let (train_mean, train_sd) = (mean(&ytr), sd(&ytr));
            let (test_mean, test_sd) = (mean(&yte), sd(&yte));
            BalanceCheck::Regression {
                train_mean,
                train_sd,
                test_mean,
                test_sd,
                warning: (train_mean - test_mean).abs() > MEAN_TOLERANCE_SD * train_sd,
            }
        }
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSpec, FeatureKind, Role};

    fn labelled(labels: &[f64]) -> Dataset {
        let specs = vec![
            ColumnSpec::feature("x", FeatureKind::Continuous),
            ColumnSpec::new("y", FeatureKind::Binary, Role::Outcome),
        ];
        let x: Vec<f64> = (0..labels.len()).map(|i| i as f64).collect();
        Dataset::from_columns(specs, &[x, labels.to_vec()], EndpointMode::Classification).unwrap()
    }

    #[test]
    fn ten_rows_split_eight_two() {
        let ds = labelled(&[0.0; 10]);
        let pair = split_train_test(&ds, 0.8, 123).unwrap();
        assert_eq!(pair.train.n_rows(), 8);
        assert_eq!(pair.test.n_rows(), 2);
        let mut all: Vec<u64> = pair.train.row_ids().iter().chain(pair.test.row_ids()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<u64>>());
    }

    #[test]
    fn split_is_deterministic() {
        let ds = labelled(&[0.0; 50]);
        let a = split_train_test(&ds, 0.8, 123).unwrap();
        let b = split_train_test(&ds, 0.8, 123).unwrap();
        assert_eq!(a.train.row_ids(), b.train.row_ids());
        assert_eq!(a.test.row_ids(), b.test.row_ids());
        let c = split_train_test(&ds, 0.8, 124).unwrap();
        assert_ne!(a.train.row_ids(), c.train.row_ids());
    }

    #[test]
    fn empty_partition_rejected() {
        let ds = labelled(&[0.0; 3]);
        assert!(matches!(split_train_test(&ds, 0.2, 1), Err(Error::EmptyPartition { .. })));
        let hundred = labelled(&[0.0; 100]);
        assert!(matches!(split_train_test(&hundred, 1.0 - 1e-12, 1), Err(Error::EmptyPartition { .. })));
        assert!(matches!(split_train_test(&ds, 1.0, 1), Err(Error::Config(_))));
    }

    #[test]
    fn imbalanced_partitions_warn() {
        let train = labelled(&[1., 1., 1., 1., 1., 1., 1., 0., 0., 0.]);
        let test = labelled(&[1., 1., 1., 0., 0., 0., 0., 0., 0., 0.]);
        let pair = SplitPair { train, test, fraction: 0.5, seed: 0 };
        let check = class_balance_check(&pair).unwrap();
        assert!(check.warning());
        match check {
            BalanceCheck::Classification { difference, .. } => assert!((difference - 0.4).abs() < 1e-12),
            _ => unreachable!(),
        }
    }
}
