//! Gradient boosting with depth-limited regression trees.
//!
//! Logistic loss uses Newton leaf values with backtracking so every stage
//! lowers the training loss; squared-error loss fits residual means.

use serde::{Deserialize, Serialize};

use super::design::{logit, sigmoid, softplus, Design};
use super::tree::{grow_tree, Node, Presorted, Tree, TreeParams};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbm {
    pub init: f64,
    /// Leaf values already include the shrinkage.
    pub trees: Vec<Tree>,
    pub shrinkage: f64,
    pub logistic: bool,
    pub importance: Vec<f64>,
    /// Weighted mean training loss after each stage (index 0 = initial).
    pub train_loss: Vec<f64>,
}

impl Gbm {
    pub fn score_prefix(&self, row: &[f64], n_trees: usize) -> f64 {
        self.init + self.trees[..n_trees.min(self.trees.len())].iter().map(|t| t.predict(row)).sum::<f64>()
    }

    /// Probability (logistic) or value after the first `n_trees` stages.
    pub fn predict_prefix(&self, row: &[f64], n_trees: usize) -> f64 {
        let s = self.score_prefix(row, n_trees);
        if self.logistic {
            sigmoid(s)
        } else {
            s
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.predict_prefix(row, self.trees.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    pub n_trees: usize,
    pub interaction_depth: usize,
    pub shrinkage: f64,
    pub min_obs_in_node: usize,
}

fn loss(logistic: bool, y: f64, f: f64) -> f64 {
    if logistic {
        softplus(f) - y * f
    } else {
        0.5 * (y - f).powi(2)
    }
}

pub fn gbm_fit(d: &Design, y: &[f64], w: &[f64], params: &GbmParams, logistic: bool, seed: u64) -> Gbm {
    let n = d.n;
    let wsum: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let init = if logistic { logit(ybar.clamp(1e-6, 1.0 - 1e-6)) } else { ybar };
    let mut f = vec![init; n];
    let mean_loss = |f: &[f64]| (0..n).map(|i| w[i] * loss(logistic, y[i], f[i])).sum::<f64>() / wsum;
    let mut train_loss = vec![mean_loss(&f)];
    let sorted = Presorted::new(d);
    let tp = TreeParams {
        max_depth: Some(params.interaction_depth),
        min_node: params.min_obs_in_node as f64,
        mtry: None,
    };
    let mut r = rng::rng_from_seed(seed);
    let mut importance = vec![0.0; d.p];
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut resid = vec![0.0; n];
    for _ in 0..params.n_trees {
        for i in 0..n {
            resid[i] = if logistic { y[i] - sigmoid(f[i]) } else { y[i] - f[i] };
        }
        let mut tree = grow_tree(d, &sorted, &resid, w, &tp, &mut r, &mut importance);
        let leaf_of: Vec<usize> = (0..n).map(|i| tree.leaf_index(d.row(i))).collect();
        let mut num = vec![0.0; tree.nodes.len()];
        let mut den = vec![0.0; tree.nodes.len()];
        for i in 0..n {
            let h = if logistic {
                let p = sigmoid(f[i]);
                p * (1.0 - p)
            } else {
                1.0
            };
            num[leaf_of[i]] += w[i] * resid[i];
            den[leaf_of[i]] += w[i] * h;
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
        for i in 0..n {
            members[leaf_of[i]].push(i);
        }
        for (k, node) in tree.nodes.iter_mut().enumerate() {
            if let Node::Leaf { value } = node {
                let mut step = if den[k] > 1e-12 { params.shrinkage * num[k] / den[k] } else { 0.0 };
                let before: f64 = members[k].iter().map(|&i| w[i] * loss(logistic, y[i], f[i])).sum();
                let mut halvings = 0;
                while step != 0.0 {
                    let after: f64 = members[k].iter().map(|&i| w[i] * loss(logistic, y[i], f[i] + step)).sum();
                    if after <= before {
                        break;
                    }
                    halvings += 1;
                    step = if halvings < 40 { step / 2.0 } else { 0.0 };
                }
                *value = step;
            }
        }
        for i in 0..n {
            if let Node::Leaf { value } = tree.nodes[leaf_of[i]] {
                f[i] += value;
            }
        }
        train_loss.push(mean_loss(&f));
        trees.push(tree);
    }
    Gbm { init, trees, shrinkage: params.shrinkage, logistic, importance, train_loss }
}
