//! Bagged CART regression trees with mean-decrease-in-impurity importance.

use std::cmp::Ordering;

use ndarray::ArrayView2;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub min_samples_split: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            min_samples_split: 2,
            max_depth: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        n_samples: usize,
    },
    Split {
        var: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Drop in summed squared error achieved by the split.
        sse_reduction: f64,
        n_samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    /// Root is node 0.
    pub nodes: Vec<Node>,
    pub n_vars: usize,
    /// Number of (possibly repeated) training rows the tree saw.
    pub n_samples: usize,
}

struct BestSplit {
    var: usize,
    threshold: f64,
    gain: f64,
}

fn sse(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    let sse = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum::<f64>();
    (mean, sse)
}

impl RegressionTree {
    /// Grows one tree on the rows listed in `sample` (repeats allowed).
    pub fn fit(x: ArrayView2<f64>, y: &[f64], sample: &[usize], params: &ForestParams) -> Self {
        let mut tree = RegressionTree {
            nodes: Vec::new(),
            n_vars: x.ncols(),
            n_samples: sample.len(),
        };
        tree.grow(x, y, sample.to_vec(), 0, params);
        tree
    }

    fn grow(&mut self, x: ArrayView2<f64>, y: &[f64], idx: Vec<usize>, depth: usize, params: &ForestParams) -> usize {
        let n = idx.len();
        let (mean, parent_sse) = sse(y, &idx);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean, n_samples: n });

        let can_split = n >= params.min_samples_split.max(2)
            && params.max_depth.is_none_or(|d| depth < d)
            && parent_sse > 0.0;
        if !can_split {
            return slot;
        }
        let Some(best) = best_split(x, y, &idx, mean, parent_sse) else {
            return slot;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| x[[i, best.var]] <= best.threshold);
        let left = self.grow(x, y, left_idx, depth + 1, params);
        let right = self.grow(x, y, right_idx, depth + 1, params);
        self.nodes[slot] = Node::Split {
            var: best.var,
            threshold: best.threshold,
            left,
            right,
            sse_reduction: best.gain,
            n_samples: n,
        };
        slot
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    var, threshold, left, right, ..
                } => k = if row[*var] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], k: usize) -> usize {
            match &nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Unnormalized impurity decrease per variable: each split contributes
    /// its weighted variance reduction times its share of the tree's rows.
    pub fn importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_vars];
        for node in &self.nodes {
            if let Node::Split {
                var, sse_reduction, ..
            } = node
            {
                imp[*var] += sse_reduction / self.n_samples as f64;
            }
        }
        imp
    }
}

/// Orders two columns by their values on the node's rows. Used to settle
/// equal-gain candidates without looking at column position, so relabeling
/// the columns relabels the tree.
fn column_order(x: ArrayView2<f64>, idx: &[usize], a: usize, b: usize) -> Ordering {
    idx.iter()
        .map(|&i| x[[i, a]].total_cmp(&x[[i, b]]))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Exhaustive scan over variables and midpoints between consecutive distinct
/// values. Gains within rounding of each other count as equal; among those
/// the lowest threshold of the column with the smallest values wins.
fn best_split(x: ArrayView2<f64>, y: &[f64], idx: &[usize], mean: f64, parent_sse: f64) -> Option<BestSplit> {
    let n = idx.len();
    let tol = 1e-12 * parent_sse;
    let mut best: Option<BestSplit> = None;
    let mut order = idx.to_vec();
    for var in 0..x.ncols() {
        order.sort_by(|&a, &b| x[[a, var]].total_cmp(&x[[b, var]]));
        let total_s: f64 = order.iter().map(|&i| y[i] - mean).sum();
        let total_q: f64 = order.iter().map(|&i| (y[i] - mean).powi(2)).sum();
        let (mut s, mut q) = (0.0, 0.0);
        for k in 1..n {
            let d = y[order[k - 1]] - mean;
            s += d;
            q += d * d;
            let (lo, hi) = (x[[order[k - 1], var]], x[[order[k], var]]);
            if lo == hi {
                continue;
            }
            let (nl, nr) = (k as f64, (n - k) as f64);
            let sse_l = q - s * s / nl;
            let sse_r = (total_q - q) - (total_s - s).powi(2) / nr;
            let gain = parent_sse - sse_l - sse_r;
            let better = match &best {
                None => gain > 0.0,
                Some(b) if b.var == var => gain > b.gain + tol,
                Some(b) => {
                    gain > b.gain + tol || (gain >= b.gain - tol && column_order(x, idx, var, b.var).is_lt())
                }
            };
            if better {
                let mid = 0.5 * (lo + hi);
                best = Some(BestSplit {
                    var,
                    threshold: if mid < hi { mid } else { lo },
                    gain,
                });
            }
        }
    }
    best.filter(|b| b.gain > 1e-12 * parent_sse)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
    /// Seed each tree's bootstrap stream was drawn from.
    pub tree_seeds: Vec<u64>,
}

/// Fits `params.n_trees` trees, each on its own bootstrap sample. A tree's
/// randomness comes only from its derived seed, so results are the same for
/// every execution strategy.
pub fn fit_forest(x: ArrayView2<f64>, y: &[f64], params: &ForestParams, seed: u64, exec: Exec) -> Result<Forest> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid(format!("forest needs at least 2 rows, got {n}")));
    }
    if y.len() != n {
        return Err(Error::Shape(format!("{} targets for {n} rows", y.len())));
    }
    let tree_seeds: Vec<u64> = (0..params.n_trees as u64).map(|t| rng::derive(seed, t)).collect();
    let trees = exec.map(params.n_trees, |t| {
        let sample: Vec<usize> = if params.bootstrap {
            let mut r = rng::seeded(tree_seeds[t], rng::stream::FOREST);
            (0..n).map(|_| r.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        RegressionTree::fit(x, y, &sample, params)
    });
    Ok(Forest { trees, tree_seeds })
}

impl Forest {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean decrease in impurity averaged over trees and normalized to sum
    /// to 1. If no tree ever split, every importance is 0.
    pub fn importance(&self) -> Vec<f64> {
        let n_vars = self.trees.first().map_or(0, |t| t.n_vars);
        let mut imp = vec![0.0; n_vars];
        for tree in &self.trees {
            for (acc, v) in imp.iter_mut().zip(tree.importance()) {
                *acc += v;
            }
        }
        let n_trees = self.trees.len() as f64;
        imp.iter_mut().for_each(|v| *v /= n_trees);
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }
}
