use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::Design;
use super::tree::{grow_tree, Presorted, Tree, TreeParams};
use crate::rng;

/// Bagged CART trees with per-node feature sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Summed squared-error decrease per feature over all trees.
    pub importance: Vec<f64>,
}

impl Forest {
    /// Mean over the first `n_trees` trees (class-1 fraction for classification).
    pub fn predict_prefix(&self, row: &[f64], n_trees: usize) -> f64 {
        let t = n_trees.min(self.trees.len()).max(1);
        self.trees[..t].iter().map(|tr| tr.predict(row)).sum::<f64>() / t as f64
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.predict_prefix(row, self.trees.len())
    }
}

/// Tree `t` draws its bootstrap sample and feature subsets from `stream(seed, t)`,
/// so the forest is identical however the trees are scheduled.
pub fn fit_forest(d: &Design, y: &[f64], w: &[f64], n_trees: usize, mtry: usize, min_node: f64, seed: u64) -> Forest {
    let sorted = Presorted::new(d);
    let params = TreeParams { max_depth: None, min_node, mtry: Some(mtry) };
    let grown: Vec<(Tree, Vec<f64>)> = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let mut counts = vec![0u32; d.n];
            for _ in 0..d.n {
                counts[r.random_range(0..d.n)] += 1;
            }
            let bw: Vec<f64> = counts.iter().zip(w).map(|(&c, &wi)| f64::from(c) * wi).collect();
            let mut imp = vec![0.0; d.p];
            let tree = grow_tree(d, &sorted, y, &bw, &params, &mut r, &mut imp);
            (tree, imp)
        })
        .collect();
    let mut importance = vec![0.0; d.p];
    let mut trees = Vec::with_capacity(n_trees);
    for (tree, imp) in grown {
        importance.iter_mut().zip(&imp).for_each(|(a, b)| *a += b);
        trees.push(tree);
    }
    Forest { trees, importance }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_toy_is_learned() {
        let mut r = rng::rng_from_seed(8);
        let n = 500;
        let x: Vec<f64> = (0..n * 2).map(|_| r.random_range(-1.0..1.0)).collect();
        let d = Design::from_rows(x, n, 2);
        let y: Vec<f64> = (0..n).map(|i| f64::from(d.at(i, 0) + d.at(i, 1) > 0.0)).collect();
        let f = fit_forest(&d, &y, &vec![1.0; n], 500, 1, 1.0, 3);
        let preds: Vec<f64> = (0..n).map(|i| f.predict(d.row(i))).collect();
        // Pair-counting AUC.
        let (mut c, mut t) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                if y[i] == 1.0 && y[j] == 0.0 {
                    t += 1.0;
                    c += if preds[i] > preds[j] { 1.0 } else if preds[i] == preds[j] { 0.5 } else { 0.0 };
                }
            }
        }
        assert!(c / t > 0.99);
        assert!(preds.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn thread_pool_size_does_not_matter() {
        let d = Design::from_rows((0..300).map(|i| ((i * 37) % 101) as f64).collect(), 100, 3);
        let y: Vec<f64> = (0..100).map(|i| f64::from(d.at(i, 1) > 50.0)).collect();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| fit_forest(&d, &y, &vec![1.0; 100], 20, 2, 1.0, 9));
        let b = four.install(|| fit_forest(&d, &y, &vec![1.0; 100], 20, 2, 1.0, 9));
        assert_eq!(a, b);
    }
}
