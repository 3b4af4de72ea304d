use serde::{Deserialize, Serialize};

use super::design::Design;
use crate::preprocess::MixedDistance;

/// Reference rows for k-nearest-neighbour prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub p: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub distance: MixedDistance,
}

pub fn fit_knn(d: &Design, y: &[f64], w: &[f64], k: usize) -> KnnModel {
    let distance = MixedDistance::fit(&d.kinds, d.columns().into_iter());
    KnnModel { k, p: d.p, x: d.x.clone(), y: y.to_vec(), w: w.to_vec(), distance }
}

impl KnnModel {
    fn n(&self) -> usize {
        self.y.len()
    }

    /// Weighted neighbour mean of `y` for each `k` in `ks` from one search;
    /// distance ties go to the lower reference index.
    pub fn predict_many(&self, row: &[f64], ks: &[usize]) -> Vec<f64> {
        let n = self.n();
        let kmax = ks.iter().copied().max().unwrap_or(1).min(n);
        let mut order: Vec<(f64, usize)> =
            (0..n).map(|i| (self.distance.complete(row, &self.x[i * self.p..(i + 1) * self.p]), i)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if kmax < n {
            order.select_nth_unstable_by(kmax - 1, cmp);
            order.truncate(kmax);
        }
        order.sort_by(cmp);
        let mut prefix_wy = Vec::with_capacity(kmax);
        let mut prefix_w = Vec::with_capacity(kmax);
        let (mut a, mut b) = (0.0, 0.0);
        for &(_, i) in &order {
            a += self.w[i] * self.y[i];
            b += self.w[i];
            prefix_wy.push(a);
            prefix_w.push(b);
        }
        ks.iter()
            .map(|&k| {
                let t = k.min(kmax).max(1) - 1;
                if prefix_w[t] > 0.0 {
                    prefix_wy[t] / prefix_w[t]
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.predict_many(row, &[self.k])[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_neighbours_average() {
        let d = Design::from_rows(vec![0.0, 1.0, 2.0, 10.0, 11.0], 5, 1);
        let y = [0.0, 0.0, 1.0, 1.0, 1.0];
        let m = fit_knn(&d, &y, &[1.0; 5], 3);
        assert!((m.predict(&[0.9]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.predict_many(&[10.5], &[1, 2, 5]), vec![1.0, 1.0, 0.6]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let d = Design::from_rows(vec![1.0, -1.0], 2, 1);
        let m = fit_knn(&d, &[0.0, 1.0], &[1.0; 2], 1);
        assert_eq!(m.predict(&[0.0]), 0.0);
    }
}
