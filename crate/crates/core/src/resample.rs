//! Index-level resampling plans: k-fold, bootstrap, leave-one-out, nested.
//!
//! Plans expand to `(analysis, assessment)` index pairs over `0..n`. Every
//! expansion is a pure function of its arguments; per-resample generators are
//! derived from `(seed, ordinal)` so pairs can be consumed in any order.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PlanKind {
    #[serde(rename = "cv")]
    KFold { k: usize },
    #[serde(rename = "boot")]
    Bootstrap { reps: usize },
    Loocv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResamplingPlan {
    #[serde(flatten)]
    pub kind: PlanKind,
    #[serde(default)]
    pub seed: u64,
}

impl ResamplingPlan {
    pub fn kfold(k: usize, seed: u64) -> Self {
        ResamplingPlan { kind: PlanKind::KFold { k }, seed }
    }

    pub fn bootstrap(reps: usize, seed: u64) -> Self {
        ResamplingPlan { kind: PlanKind::Bootstrap { reps }, seed }
    }

    pub fn loocv() -> Self {
        ResamplingPlan { kind: PlanKind::Loocv, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PlanKind::KFold { k } if k < 2 => Err(Error::Config(format!("k-fold needs k >= 2, got {k}"))),
            PlanKind::Bootstrap { reps } if reps == 0 => Err(Error::Config("bootstrap needs reps >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Expands the plan over `0..n`.
    pub fn expand(&self, n: usize) -> Result<ResampleIndexSet> {
        self.validate()?;
        match self.kind {
            PlanKind::KFold { k } => make_kfold(n, k, self.seed),
            PlanKind::Bootstrap { reps } => make_bootstrap(n, reps, self.seed),
            PlanKind::Loocv => make_loocv(n),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResamplePair {
    /// May contain repeats (bootstrap).
    pub analysis: Vec<usize>,
    pub assessment: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResampleIndexSet {
    pub pairs: Vec<ResamplePair>,
}

impl ResampleIndexSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Seeded shuffle, then contiguous folds; the first `n % k` folds get one extra row.
pub fn make_kfold(n: usize, k: usize, seed: u64) -> Result<ResampleIndexSet> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, 0));
    let base = n / k;
    let extra = n % k;
    let mut pairs = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut assessment = order[start..start + len].to_vec();
        assessment.sort_unstable();
        let mut analysis: Vec<usize> = order[..start].iter().chain(&order[start + len..]).copied().collect();
        analysis.sort_unstable();
        pairs.push(ResamplePair { analysis, assessment });
        start += len;
    }
    Ok(ResampleIndexSet { pairs })
}

/// `reps` draws of `n` rows with replacement; assessment is the out-of-bag rows.
pub fn make_bootstrap(n: usize, reps: usize, seed: u64) -> Result<ResampleIndexSet> {
    if n < 2 {
        return Err(Error::TooFewRows(format!("bootstrap needs n >= 2, got {n}")));
    }
    if reps == 0 {
        return Err(Error::Config("bootstrap needs reps >= 1".into()));
    }
    let pairs = (0..reps)
        .map(|b| {
            let mut r = rng::stream(seed, b as u64);
            let mut analysis: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
            analysis.sort_unstable();
            let mut in_bag = vec![false; n];
            analysis.iter().for_each(|&i| in_bag[i] = true);
            let assessment = (0..n).filter(|&i| !in_bag[i]).collect();
            ResamplePair { analysis, assessment }
        })
        .collect();
    Ok(ResampleIndexSet { pairs })
}

pub fn make_loocv(n: usize) -> Result<ResampleIndexSet> {
    if n < 2 {
        return Err(Error::TooFewRows(format!("LOOCV needs n >= 2, got {n}")));
    }
    let pairs = (0..n)
        .map(|i| ResamplePair { analysis: (0..n).filter(|&j| j != i).collect(), assessment: vec![i] })
        .collect();
    Ok(ResampleIndexSet { pairs })
}

/// One outer pair with its inner pairs, all indices in the `0..n` universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedPair {
    pub outer: ResamplePair,
    pub inner: Vec<ResamplePair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NestedPlan {
    pub outer: ResamplingPlan,
    pub inner: ResamplingPlan,
}

/// Expands a nested plan. Inner pairs are drawn from each outer analysis set
/// (by position, then mapped back to row indices) with seed
/// `derive_seed(outer.seed, outer_index)`.
pub fn make_nested(n: usize, plan: &NestedPlan) -> Result<Vec<NestedPair>> {
    let outer = plan.outer.expand(n)?;
    outer
        .pairs
        .into_iter()
        .enumerate()
        .map(|(o, pair)| {
            let inner_plan = plan.inner.with_seed(rng::derive_seed(plan.outer.seed, o as u64));
            let inner = inner_plan
                .expand(pair.analysis.len())?
                .pairs
                .into_iter()
                .map(|p| ResamplePair {
                    analysis: p.analysis.iter().map(|&i| pair.analysis[i]).collect(),
                    assessment: {
                        let mut a: Vec<usize> = p.assessment.iter().map(|&i| pair.analysis[i]).collect();
                        a.sort_unstable();
                        a.dedup();
                        a
                    },
                })
                .collect();
            Ok(NestedPair { outer: pair, inner })
        })
        .collect()
}
