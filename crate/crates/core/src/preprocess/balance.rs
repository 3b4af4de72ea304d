use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::distance::{k_smallest, MixedDistance};
use crate::data::{Dataset, EndpointMode, FeatureKind};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BalanceStrategy {
    #[default]
    None,
    /// Copy random minority rows until the classes are equal.
    Upsample,
    /// Drop random majority rows until the classes are equal.
    Downsample,
    Smote { k: usize },
    /// Leave rows alone; the loss weights each class.
    ClassWeights { negative: f64, positive: f64 },
}

impl BalanceStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BalanceStrategy::Smote { k } if k == 0 => Err(Error::InvalidHyper("SMOTE k must be >= 1".into())),
            BalanceStrategy::ClassWeights { negative, positive } if !(negative > 0.0 && positive > 0.0) => {
                Err(Error::InvalidHyper("class weights must be > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Per-row loss weights under `ClassWeights`, else `None`.
    pub fn row_weights(&self, labels: &[f64]) -> Option<Vec<f64>> {
        match *self {
            BalanceStrategy::ClassWeights { negative, positive } => {
                Some(labels.iter().map(|&y| if y == 1.0 { positive } else { negative }).collect())
            }
            _ => None,
        }
    }
}

/// Point on the segment from `seed_row` to `neighbor` at fraction `gap`.
///
/// Continuous columns interpolate linearly; binary and categorical columns
/// take the value of whichever parent is nearer (`gap < 0.5` keeps the seed).
pub fn smote_interpolate(seed_row: &[f64], neighbor: &[f64], gap: f64, kinds: &[FeatureKind]) -> Vec<f64> {
    seed_row
        .iter()
        .zip(neighbor)
        .zip(kinds)
        .map(|((&a, &b), kind)| match kind {
            FeatureKind::Continuous => a + gap * (b - a),
            _ => {
                if gap < 0.5 {
                    a
                } else {
                    b
                }
            }
        })
        .collect()
}

/// Rebalances a complete training set. Never call on assessment data.
pub fn rebalance(train: &Dataset, strategy: &BalanceStrategy, seed: u64) -> Result<Dataset> {
    strategy.validate()?;
    if matches!(strategy, BalanceStrategy::None | BalanceStrategy::ClassWeights { .. }) {
        return Ok(train.clone());
    }
    if train.endpoint_mode() != EndpointMode::Classification {
        return Err(Error::Config("class rebalancing requires a classification endpoint".into()));
    }
    let labels = train.labels()?;
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let (minority, majority) = if pos.len() < neg.len() { (pos, neg) } else { (neg, pos) };
    let deficit = majority.len() - minority.len();
    let mut r = rng::rng_from_seed(seed);

    match *strategy {
        BalanceStrategy::Upsample => {
            let extra: Vec<usize> = (0..deficit).map(|_| *minority.choose(&mut r).unwrap()).collect();
            let rows: Vec<usize> = (0..train.n_rows()).chain(extra).collect();
            Ok(train.select_rows(&rows))
        }
        BalanceStrategy::Downsample => {
            let mut drop = majority.clone();
            drop.shuffle(&mut r);
            drop.truncate(deficit);
            drop.sort_unstable();
            let rows: Vec<usize> = (0..train.n_rows()).filter(|i| drop.binary_search(i).is_err()).collect();
            Ok(train.select_rows(&rows))
        }
        BalanceStrategy::Smote { k } => {
            if minority.len() <= k {
                return Err(Error::SmoteTooFewMinority { k, minority: minority.len() });
            }
            if train.missing_count() > 0 {
                return Err(Error::SchemaMismatch("SMOTE requires complete data; impute first".into()));
            }
            let feats = train.feature_indices();
            let kinds: Vec<FeatureKind> = feats.iter().map(|&c| train.spec(c).kind.clone()).collect();
            let sub = train.select_rows(&minority).select_columns(&feats);
            let distance = MixedDistance::fit(&kinds, (0..feats.len()).map(|j| sub.observed(j)));
            let mut neighbors: Vec<Option<Vec<usize>>> = vec![None; minority.len()];
            let mut out = train.clone();
            let mut next_id = train.row_ids().iter().copied().max().unwrap_or(0) + 1;
            let outcome = train.require_outcome()?;
            let p = train.n_cols();
            let mut values = Vec::with_capacity(deficit * p);
            let mut ids = Vec::with_capacity(deficit);
            for _ in 0..deficit {
                let a = r.random_range(0..minority.len());
                let nbrs = neighbors[a].get_or_insert_with(|| {
                    let d: Vec<f64> = (0..sub.n_rows())
                        .map(|b| if b == a { f64::INFINITY } else { distance.complete(sub.row(a), sub.row(b)) })
                        .collect();
                    k_smallest(&d, k)
                });
                let b = nbrs[r.random_range(0..nbrs.len())];
                let gap: f64 = r.random();
                let synth = smote_interpolate(sub.row(a), sub.row(b), gap, &kinds);
                let mut row = train.row(minority[a]).to_vec();
                for (j, &c) in feats.iter().enumerate() {
                    row[c] = synth[j];
                }
                row[outcome] = train.value(minority[a], outcome);
                values.extend_from_slice(&row);
                ids.push(next_id);
                next_id += 1;
            }
            let miss = vec![false; values.len()];
            out.append_rows(&values, &miss, &ids);
            Ok(out)
        }
        BalanceStrategy::None | BalanceStrategy::ClassWeights { .. } => unreachable!(),
    }
}
