//! CART regression trees grown level by level over presorted columns.
//!
//! Classification trees are regression trees on a 0/1 target: the squared
//! error decrease of a split is proportional to its Gini decrease, and leaves
//! hold the weighted class-1 fraction.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::design::Design;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { .. } => return at,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// `None` grows until nodes are pure or too small.
    pub max_depth: Option<usize>,
    /// Minimum total weight in each child.
    pub min_node: f64,
    /// Features drawn per node; `None` scans all.
    pub mtry: Option<usize>,
}

/// Row order of every column, ascending by value then row index.
#[derive(Debug, Clone)]
pub struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(d: &Design) -> Self {
        let order = (0..d.p)
            .map(|j| {
                let mut idx: Vec<u32> = (0..d.n as u32).collect();
                idx.sort_by(|&a, &b| d.at(a as usize, j).total_cmp(&d.at(b as usize, j)).then(a.cmp(&b)));
                idx
            })
            .collect();
        Presorted { order }
    }
}

/// Gini impurity decrease of splitting class counts `parent` into `left` and
/// `right`, each child weighted by its share of the parent.
pub fn gini_decrease(parent: (f64, f64), left: (f64, f64), right: (f64, f64)) -> f64 {
    fn gini((a, b): (f64, f64)) -> f64 {
        let n = a + b;
        if n == 0.0 {
            0.0
        } else {
            1.0 - (a / n).powi(2) - (b / n).powi(2)
        }
    }
    let n = parent.0 + parent.1;
    gini(parent) - (left.0 + left.1) / n * gini(left) - (right.0 + right.1) / n * gini(right)
}

const NONE: u32 = u32::MAX;

struct Open {
    node: usize,
    depth: usize,
    w: f64,
    s: f64,
    ss: f64,
    candidates: Option<Vec<bool>>,
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grows one tree on `y` with row weights `w` (zero-weight rows are ignored).
/// Adds each split's squared-error decrease to `importance[feature]`.
#[allow(clippy::too_many_arguments)]
pub fn grow_tree(
    d: &Design,
    sorted: &Presorted,
    y: &[f64],
    w: &[f64],
    params: &TreeParams,
    rng: &mut Rng,
    importance: &mut [f64],
) -> Tree {
    let (n, p) = (d.n, d.p);
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut pos = vec![NONE; n];
    let (mut w0, mut s0, mut ss0) = (0.0, 0.0, 0.0);
    for i in 0..n {
        if w[i] > 0.0 {
            pos[i] = 0;
            w0 += w[i];
            s0 += w[i] * y[i];
            ss0 += w[i] * y[i] * y[i];
        }
    }
    let mut open = vec![Open { node: 0, depth: 0, w: w0, s: s0, ss: ss0, candidates: None }];
    let mtry = params.mtry.map(|m| m.clamp(1, p.max(1)));

    while !open.is_empty() {
        for o in &mut open {
            nodes[o.node] = Node::Leaf { value: if o.w > 0.0 { o.s / o.w } else { 0.0 } };
        }
        // Which open nodes may split, and on which features.
        let mut splittable = vec![false; open.len()];
        for (k, o) in open.iter_mut().enumerate() {
            let impurity = o.ss - o.s * o.s / o.w.max(f64::MIN_POSITIVE);
            let deep_ok = params.max_depth.is_none_or(|m| o.depth < m);
            splittable[k] = deep_ok && o.w >= 2.0 * params.min_node && impurity > 1e-12 * o.w.max(1.0) && p > 0;
            if splittable[k] {
                if let Some(m) = mtry.filter(|&m| m < p) {
                    let mut pool: Vec<usize> = (0..p).collect();
                    let mut mask = vec![false; p];
                    for t in 0..m {
                        let pick = rng.random_range(t..p);
                        pool.swap(t, pick);
                        mask[pool[t]] = true;
                    }
                    o.candidates = Some(mask);
                }
            }
        }
        if !splittable.iter().any(|&s| s) {
            break;
        }

        let mut best: Vec<Option<Best>> = vec![None; open.len()];
        let mut wl = vec![0.0; open.len()];
        let mut sl = vec![0.0; open.len()];
        let mut last = vec![f64::NAN; open.len()];
        for f in 0..p {
            let active = |k: usize| splittable[k] && open[k].candidates.as_ref().is_none_or(|m| m[f]);
            if !(0..open.len()).any(active) {
                continue;
            }
            let usable: Vec<bool> = (0..open.len()).map(active).collect();
            wl.iter_mut().for_each(|v| *v = 0.0);
            sl.iter_mut().for_each(|v| *v = 0.0);
            last.iter_mut().for_each(|v| *v = f64::NAN);
            for &ri in &sorted.order[f] {
                let i = ri as usize;
                let k = pos[i];
                if k == NONE || !usable[k as usize] {
                    continue;
                }
                let k = k as usize;
                let v = d.at(i, f);
                if v > last[k] {
                    let o = &open[k];
                    let (lw, rw) = (wl[k], o.w - wl[k]);
                    if lw >= params.min_node && rw >= params.min_node {
                        let gain = sl[k] * sl[k] / lw + (o.s - sl[k]).powi(2) / rw - o.s * o.s / o.w;
                        if gain > 1e-12 * o.w.max(1.0) && best[k].is_none_or(|b| gain > b.gain) {
                            let mut threshold = last[k] + (v - last[k]) / 2.0;
                            if threshold >= v {
                                threshold = last[k];
                            }
                            best[k] = Some(Best { gain, feature: f, threshold });
                        }
                    }
                }
                wl[k] += w[i];
                sl[k] += w[i] * y[i];
                last[k] = v;
            }
        }

        // Materialize children and route rows.
        let mut next = Vec::new();
        let mut child_of = vec![(NONE, NONE); open.len()];
        for (k, o) in open.iter().enumerate() {
            if let Some(b) = best[k] {
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[o.node] = Node::Split { feature: b.feature, threshold: b.threshold, left, right: left + 1 };
                importance[b.feature] += b.gain;
                child_of[k] = (next.len() as u32, next.len() as u32 + 1);
                for node in [left, left + 1] {
                    next.push(Open { node, depth: o.depth + 1, w: 0.0, s: 0.0, ss: 0.0, candidates: None });
                }
            }
        }
        for i in 0..n {
            let k = pos[i];
            if k == NONE {
                continue;
            }
            let (l, r) = child_of[k as usize];
            if l == NONE {
                pos[i] = NONE;
                continue;
            }
            let b = best[k as usize].unwrap();
            let c = if d.at(i, b.feature) <= b.threshold { l } else { r };
            pos[i] = c;
            let o = &mut next[c as usize];
            o.w += w[i];
            o.s += w[i] * y[i];
            o.ss += w[i] * y[i] * y[i];
        }
        open = next;
    }
    Tree { nodes }
}

/// Grows a single tree with unit weights and a seeded feature sampler.
pub fn cart_grow(d: &Design, y: &[f64], params: &TreeParams, seed: u64) -> Tree {
    let sorted = Presorted::new(d);
    let mut importance = vec![0.0; d.p];
    grow_tree(d, &sorted, y, &vec![1.0; d.n], params, &mut rng::rng_from_seed(seed), &mut importance)
}
