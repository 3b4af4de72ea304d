use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mann–Whitney AUC from mid-ranks: the probability that a random positive
/// scores above a random negative, ties counting one half.
pub fn auc(probs: &[f64], labels: &[u8]) -> Result<f64> {
    let n = probs.len();
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = n - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && probs[idx[j + 1]] == probs[idx[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their mean.
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n1 * (n1 + 1)) as f64 / 2.0;
    Ok(u / (n1 as f64 * n0 as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }
}

/// Predicted positive iff `p > cutoff`.
pub fn confusion_at(probs: &[f64], labels: &[u8], cutoff: f64) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&p, &l) in probs.iter().zip(labels) {
        match (p > cutoff, l == 1) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    cm
}

/// Threshold metrics; `None` where a denominator is zero (named in `undefined`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub auc: f64,
    pub cutoff: f64,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub f1: Option<f64>,
    pub undefined: Vec<String>,
}

pub fn discrimination_report(cm: &ConfusionMatrix, auc: f64, cutoff: f64) -> DiscriminationReport {
    let mut undefined = Vec::new();
    let mut ratio = |name: &str, num: u64, den: u64| {
        if den == 0 {
            undefined.push(name.to_string());
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let accuracy = ratio("accuracy", cm.tp + cm.tn, cm.n());
    let sensitivity = ratio("sensitivity", cm.tp, cm.positives());
    let specificity = ratio("specificity", cm.tn, cm.negatives());
    let ppv = ratio("ppv", cm.tp, cm.tp + cm.fp);
    let npv = ratio("npv", cm.tn, cm.tn + cm.fn_);
    let f1 = match (ppv, sensitivity) {
        (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
        _ => {
            undefined.push("f1".to_string());
            None
        }
    };
    DiscriminationReport { auc, cutoff, accuracy, sensitivity, specificity, ppv, npv, f1, undefined }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub cutoff: f64,
    /// 1 - specificity.
    pub fpr: f64,
    /// Sensitivity.
    pub tpr: f64,
}

fn counts(labels: &[u8]) -> Result<(f64, f64)> {
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Candidate cutoffs: 0, 1 and midpoints between adjacent distinct scores.
fn candidates(sorted: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0];
    for w in sorted.windows(2) {
        if w[1] > w[0] {
            c.push(w[0] + (w[1] - w[0]) / 2.0);
        }
    }
    c.push(1.0);
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// `(cutoff, sensitivity, specificity)` at every candidate cutoff, ascending.
fn sweep(probs: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64, f64)>> {
    let (pos, neg) = counts(labels)?;
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| probs[i]).collect();
    // Positives among the first k sorted rows.
    let mut pos_prefix = vec![0usize; sorted.len() + 1];
    for (k, &i) in order.iter().enumerate() {
        pos_prefix[k + 1] = pos_prefix[k] + usize::from(labels[i] == 1);
    }
    Ok(candidates(&sorted)
        .into_iter()
        .map(|c| {
            let below = sorted.partition_point(|&s| s <= c);
            let fn_ = pos_prefix[below] as f64;
            let tn = below as f64 - fn_;
            ((c), (pos - fn_) / pos, tn / neg)
        })
        .collect())
}

/// ROC points ordered by increasing false-positive rate, from (0,0) to (1,1).
pub fn roc_curve(probs: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>> {
    let mut pts: Vec<RocPoint> =
        sweep(probs, labels)?.into_iter().map(|(cutoff, sens, spec)| RocPoint { cutoff, fpr: 1.0 - spec, tpr: sens }).collect();
    pts.reverse();
    if pts.first().is_none_or(|p| p.fpr > 0.0 || p.tpr > 0.0) {
        pts.insert(0, RocPoint { cutoff: 1.0, fpr: 0.0, tpr: 0.0 });
    }
    if pts.last().is_none_or(|p| p.fpr < 1.0 || p.tpr < 1.0) {
        pts.push(RocPoint { cutoff: 0.0, fpr: 1.0, tpr: 1.0 });
    }
    Ok(pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CutoffMode {
    /// Closest to the (0,1) corner of the ROC plot.
    Balanced,
    /// Smallest cutoff with specificity >= target.
    RuleIn { target: f64 },
    /// Largest cutoff with sensitivity >= target.
    RuleOut { target: f64 },
}

/// Cutoff selection; call with training predictions only.
pub fn optimal_cutoff(probs: &[f64], labels: &[u8], mode: CutoffMode) -> Result<f64> {
    let table = sweep(probs, labels)?;
    match mode {
        CutoffMode::Balanced => {
            let mut best = (f64::INFINITY, 0.0);
            for (c, sens, spec) in table {
                let d = (1.0 - sens).powi(2) + (1.0 - spec).powi(2);
                if d < best.0 {
                    best = (d, c);
                }
            }
            Ok(best.1)
        }
        CutoffMode::RuleIn { target } => table
            .iter()
            .find(|t| t.2 >= target)
            .map(|t| t.0)
            .ok_or(Error::TargetUnachievable { target }),
        CutoffMode::RuleOut { target } => table
            .iter()
            .rev()
            .find(|t| t.1 >= target)
            .map(|t| t.0)
            .ok_or(Error::TargetUnachievable { target }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn pair_count(probs: &[f64], labels: &[u8]) -> f64 {
        let (mut c, mut t) = (0.0, 0.0);
        for i in 0..probs.len() {
            for j in 0..probs.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    t += 1.0;
                    if probs[i] > probs[j] {
                        c += 1.0;
                    } else if probs[i] == probs[j] {
                        c += 0.5;
                    }
                }
            }
        }
        c / t
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.8, 0.3], &[1, 0, 1]).unwrap(), 0.5);
        assert_eq!(auc(&[0.9, 0.8, 0.1, 0.2], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.4; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn auc_equals_pair_counting_with_ties() {
        let mut r = crate::rng::rng_from_seed(99);
        for _ in 0..200 {
            let n = r.random_range(2..=200);
            let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let probs: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..20)) / 20.0).collect();
            assert!((auc(&probs, &labels).unwrap() - pair_count(&probs, &labels)).abs() < 1e-12);
        }
    }

    #[test]
    fn published_confusion_matrix() {
        let cm = ConfusionMatrix { tp: 869, fp: 157, tn: 800, fn_: 174 };
        let rep = discrimination_report(&cm, 0.9, 0.5);
        let close = |v: Option<f64>, t: f64| (v.unwrap() - t).abs() < 5e-4;
        assert!(close(rep.accuracy, 0.8345));
        assert!(close(rep.sensitivity, 0.8331));
        assert!(close(rep.specificity, 0.8359));
        assert!(close(rep.ppv, 0.8470));
        assert!(close(rep.npv, 0.8214));
        assert!(close(rep.f1, 0.8400));
        assert!(rep.undefined.is_empty());
    }

    #[test]
    fn degenerate_denominators_flagged() {
        let cm = confusion_at(&[0.1, 0.2, 0.3], &[1, 0, 1], 0.5);
        let rep = discrimination_report(&cm, 0.5, 0.5);
        assert!(rep.ppv.is_none() && rep.undefined.contains(&"ppv".to_string()));
        let perfect = discrimination_report(&ConfusionMatrix { tp: 3, fp: 0, tn: 4, fn_: 0 }, 1.0, 0.5);
        for v in [perfect.accuracy, perfect.sensitivity, perfect.specificity, perfect.ppv, perfect.npv, perfect.f1] {
            assert_eq!(v, Some(1.0));
        }
    }

    #[test]
    fn strict_cutoff_extremes() {
        let probs = [0.0, 0.3, 0.7, 1.0];
        let labels = [0, 1, 0, 1];
        let all = confusion_at(&probs, &labels, 0.0);
        assert_eq!((all.fn_, all.tn), (0, 1)); // the exact-0 score is not > 0
        let none = confusion_at(&probs, &labels, 1.0);
        assert_eq!((none.tp, none.fp), (0, 0));
        let inner = confusion_at(&[0.2, 0.4, 0.6], &[0, 1, 1], 0.0);
        assert_eq!((inner.fn_, inner.tn), (0, 0));
    }

    #[test]
    fn balanced_cutoff_example() {
        let c = optimal_cutoff(&[0.2, 0.3, 0.6, 0.9], &[0, 0, 1, 1], CutoffMode::Balanced).unwrap();
        assert!((c - 0.45).abs() < 1e-12);
        let cm = confusion_at(&[0.2, 0.3, 0.6, 0.9], &[0, 0, 1, 1], c);
        assert_eq!((cm.tp, cm.tn), (2, 2));
    }

    #[test]
    fn rule_in_moves_cutoff_up() {
        let mut r = crate::rng::rng_from_seed(2);
        let labels: Vec<u8> = (0..400).map(|i| u8::from(i % 2 == 0)).collect();
        let probs: Vec<f64> =
            labels.iter().map(|&l| (0.5 + 0.25 * (f64::from(l) - 0.5) + r.random_range(-0.3..0.3)).clamp(0.0, 1.0)).collect();
        let balanced = optimal_cutoff(&probs, &labels, CutoffMode::Balanced).unwrap();
        let rule_in = optimal_cutoff(&probs, &labels, CutoffMode::RuleIn { target: 0.95 }).unwrap();
        let rule_out = optimal_cutoff(&probs, &labels, CutoffMode::RuleOut { target: 0.95 }).unwrap();
        assert!(rule_in > balanced && rule_out < balanced);
        let cm = confusion_at(&probs, &labels, rule_in);
        assert!(cm.tn as f64 / cm.negatives() as f64 >= 0.95);
        assert!(matches!(
            optimal_cutoff(&probs, &labels, CutoffMode::RuleIn { target: 1.5 }),
            Err(Error::TargetUnachievable { .. })
        ));
    }

    #[test]
    fn balanced_matches_brute_force() {
        let mut r = crate::rng::rng_from_seed(31);
        for _ in 0..100 {
            let n = r.random_range(4..60);
            let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let probs: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..30)) / 30.0).collect();
            let got = optimal_cutoff(&probs, &labels, CutoffMode::Balanced).unwrap();
            let dist = |c: f64| {
                let cm = confusion_at(&probs, &labels, c);
                let sens = cm.tp as f64 / cm.positives() as f64;
                let spec = cm.tn as f64 / cm.negatives() as f64;
                (1.0 - sens).powi(2) + (1.0 - spec).powi(2)
            };
            // Every observed score, and the points between, are tried by brute force.
            let mut best = f64::INFINITY;
            for &c in probs.iter().chain([0.0, 1.0].iter()) {
                best = best.min(dist(c));
                best = best.min(dist(c - 1e-9));
            }
            assert!((dist(got) - best).abs() < 1e-12);
        }
    }

    #[test]
    fn roc_endpoints_and_monotone() {
        let pts = roc_curve(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_eq!((pts[0].fpr, pts[0].tpr), (0.0, 0.0));
        assert_eq!((pts.last().unwrap().fpr, pts.last().unwrap().tpr), (1.0, 1.0));
        for w in pts.windows(2) {
            assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
    }

    proptest! {
        #[test]
        fn accuracy_identity(tp in 1u64..500, fp in 0u64..500, tn in 1u64..500, fn_ in 0u64..500) {
            let cm = ConfusionMatrix { tp, fp, tn, fn_ };
            let r = discrimination_report(&cm, 0.5, 0.5);
            let (p, n) = (cm.positives() as f64, cm.negatives() as f64);
            let acc = (r.sensitivity.unwrap() * p + r.specificity.unwrap() * n) / cm.n() as f64;
            prop_assert!((acc - r.accuracy.unwrap()).abs() < 1e-12);
        }
    }
}
