//! CART regression trees and bagged random forests.
//!
//! Splits are chosen by squared-error reduction over midpoints between
//! consecutive distinct feature values. Within a node, rows are ordered by
//! `(feature value, target)` before prefix sums are taken, and leaf means sum
//! targets in ascending order, so a fitted tree depends only on the multiset
//! of training rows and not on their order.

mod forest;

pub use forest::{fit_forest, predict_forest, Forest, ForestParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DesignMatrix;
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    /// Single-tree settings: depth 5, leaves of at least 7, split from 2.
    fn default() -> Self {
        Self {
            max_depth: 5,
            min_samples_leaf: 7,
            min_samples_split: 2,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("min_samples_leaf must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<(f64, usize)>) {
        match self {
            TreeNode::Leaf { value, count } => out.push((*value, *count)),
            TreeNode::Split { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    /// Largest feature index referenced by any split.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature, left, right, ..
            } => Some(
                (*feature)
                    .max(left.max_feature().unwrap_or(0))
                    .max(right.max_feature().unwrap_or(0)),
            ),
        }
    }

    /// Adds each split's gain to `totals[feature]`.
    pub fn accumulate_gain(&self, totals: &mut [f64]) {
        if let TreeNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            totals[*feature] += gain;
            left.accumulate_gain(totals);
            right.accumulate_gain(totals);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub sse_reduction: f64,
}

/// Sum of values after sorting ascending.
pub(crate) fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

fn node_sse(y: &[f64], rows: &[usize]) -> (f64, f64) {
    let mut ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let mean = ordered_sum(&mut ys) / ys.len() as f64;
    let sse = ys.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, sse)
}

fn sorted_by_feature(x: &Matrix, y: &[f64], rows: &[usize], f: usize) -> Vec<usize> {
    let mut order = rows.to_vec();
    order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(y[a].total_cmp(&y[b])));
    order
}

struct Scan {
    n: usize,
    leaf: usize,
    floor: f64,
}

impl Scan {
    /// Updates `best` with the best threshold on feature `f`, given the rows
    /// in ascending `(x_f, y)` order.
    fn feature(&self, x: &Matrix, y: &[f64], f: usize, order: &[usize], best: &mut Option<Split>) {
        let n = self.n;
        let total: f64 = order.iter().map(|&r| y[r]).sum();
        let mut left_sum = 0.0;
        for i in 1..n {
            left_sum += y[order[i - 1]];
            if i < self.leaf || n - i < self.leaf {
                continue;
            }
            let (lo, hi) = (x.get(order[i - 1], f), x.get(order[i], f));
            if lo == hi {
                continue;
            }
            let nl = i as f64;
            let nr = (n - i) as f64;
            let diff = left_sum / nl - (total - left_sum) / nr;
            let reduction = nl * nr / n as f64 * diff * diff;
            if reduction.is_nan() || reduction <= self.floor.max(0.0) {
                continue;
            }
            if best.is_none_or(|b| reduction > b.sse_reduction) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                *best = Some(Split {
                    feature: f,
                    threshold,
                    sse_reduction: reduction,
                });
            }
        }
    }
}

/// Shared preconditions of a split search; `None` when the node cannot split.
fn scan_for(y: &[f64], rows: &[usize], min_samples_leaf: usize) -> Option<Scan> {
    let n = rows.len();
    let leaf = min_samples_leaf.max(1);
    if n < 2 || n < 2 * leaf {
        return None;
    }
    let (ymin, ymax) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
        (lo.min(y[i]), hi.max(y[i]))
    });
    if ymin == ymax {
        return None;
    }
    let (_, parent_sse) = node_sse(y, rows);
    Some(Scan {
        n,
        leaf,
        floor: parent_sse * 1e-12,
    })
}

fn sorted_candidates(candidates: &[usize]) -> Vec<usize> {
    let mut features = candidates.to_vec();
    features.sort_unstable();
    features.dedup();
    features
}

/// Best admissible split of `rows` over `candidates`.
///
/// Maximizes `n_L n_R / n · (ȳ_L − ȳ_R)²`, the drop in total squared error,
/// with both children holding at least `min_samples_leaf` rows. Ties go to the
/// lower feature index, then the lower threshold. Returns `None` when no
/// admissible split strictly reduces the error.
pub fn best_split(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let scan = scan_for(y, rows, min_samples_leaf)?;
    let mut best = None;
    for f in sorted_candidates(candidates) {
        scan.feature(x, y, f, &sorted_by_feature(x, y, rows, f), &mut best);
    }
    best
}

/// Supplies the candidate features for the node with the given pre-order id.
pub(crate) type FeatureSampler<'a> = dyn FnMut(usize) -> Vec<usize> + 'a;

struct Builder<'a, 's> {
    x: &'a Matrix,
    y: &'a [f64],
    params: TreeParams,
    sampler: &'s mut FeatureSampler<'a>,
    next_id: usize,
}

/// The rows of one node, plus the same rows in `(x_f, y)` order for every
/// feature `f` while the node may still split.
struct NodeRows {
    rows: Vec<usize>,
    orders: Option<Vec<Vec<usize>>>,
}

impl Builder<'_, '_> {
    fn may_split(&self, n: usize, depth: usize) -> bool {
        depth < self.params.max_depth && n >= self.params.min_samples_split
    }

    fn build(&mut self, node: NodeRows, depth: usize) -> TreeNode {
        let id = self.next_id;
        self.next_id += 1;
        let split = match &node.orders {
            Some(orders) if self.may_split(node.rows.len(), depth) => {
                let candidates = (self.sampler)(id);
                scan_for(self.y, &node.rows, self.params.min_samples_leaf).and_then(|scan| {
                    let mut best = None;
                    for f in sorted_candidates(&candidates) {
                        scan.feature(self.x, self.y, f, &orders[f], &mut best);
                    }
                    best
                })
            }
            _ => None,
        };
        let Some(s) = split else {
            let (value, _) = node_sse(self.y, &node.rows);
            return TreeNode::Leaf {
                value,
                count: node.rows.len(),
            };
        };

        let goes_left = |r: usize| self.x.get(r, s.feature) <= s.threshold;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = node.rows.iter().partition(|&&r| goes_left(r));
        let split_left = self.may_split(left_rows.len(), depth + 1);
        let split_right = self.may_split(right_rows.len(), depth + 1);
        let (mut lo, mut ro) = (None, None);
        if split_left || split_right {
            let orders = node.orders.expect("a splitting node keeps its orders");
            let (l, r): (Vec<Vec<usize>>, Vec<Vec<usize>>) = orders
                .into_iter()
                .map(|o| o.into_iter().partition(|&r| goes_left(r)))
                .unzip();
            lo = split_left.then_some(l);
            ro = split_right.then_some(r);
        }
        let l = self.build(
            NodeRows {
                rows: left_rows,
                orders: lo,
            },
            depth + 1,
        );
        let r = self.build(
            NodeRows {
                rows: right_rows,
                orders: ro,
            },
            depth + 1,
        );
        TreeNode::Split {
            feature: s.feature,
            threshold: s.threshold,
            gain: s.sse_reduction,
            left: Box::new(l),
            right: Box::new(r),
        }
    }
}

pub(crate) fn fit_tree_with(
    train: &DesignMatrix,
    params: TreeParams,
    rows: Vec<usize>,
    sampler: &mut FeatureSampler<'_>,
) -> Result<TreeNode> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::Empty("tree needs at least one training row".into()));
    }
    let mut b = Builder {
        x: &train.x,
        y: &train.y,
        params,
        sampler,
        next_id: 0,
    };
    let orders = b.may_split(rows.len(), 0).then(|| {
        (0..train.n_features())
            .map(|f| sorted_by_feature(&train.x, &train.y, &rows, f))
            .collect()
    });
    Ok(b.build(NodeRows { rows, orders }, 0))
}

/// Fit a tree on `row_indices` (a multiset; defaults to every row) using
/// `feature_candidates` at every node (defaults to every feature).
pub fn fit_tree(
    train: &DesignMatrix,
    params: TreeParams,
    feature_candidates: Option<&[usize]>,
    row_indices: Option<&[usize]>,
) -> Result<TreeNode> {
    let p = train.n_features();
    let candidates: Vec<usize> = match feature_candidates {
        Some(c) => {
            if let Some(&bad) = c.iter().find(|&&f| f >= p) {
                return Err(Error::DimensionMismatch(format!(
                    "feature {bad} out of range for {p} features"
                )));
            }
            c.to_vec()
        }
        None => (0..p).collect(),
    };
    let rows: Vec<usize> = match row_indices {
        Some(r) => {
            if let Some(&bad) = r.iter().find(|&&i| i >= train.n_rows()) {
                return Err(Error::DimensionMismatch(format!(
                    "row {bad} out of range for {} rows",
                    train.n_rows()
                )));
            }
            r.to_vec()
        }
        None => (0..train.n_rows()).collect(),
    };
    let mut sampler = move |_: usize| candidates.clone();
    fit_tree_with(train, params, rows, &mut sampler)
}

pub fn predict_tree(t: &TreeNode, x: &[f64]) -> Result<f64> {
    if let Some(f) = t.max_feature() {
        if f >= x.len() {
            return Err(Error::DimensionMismatch(format!(
                "tree reads feature {f} but row has {} values",
                x.len()
            )));
        }
    }
    Ok(route(t, x))
}

pub(crate) fn route(mut t: &TreeNode, x: &[f64]) -> f64 {
    loop {
        match t {
            TreeNode::Leaf { value, .. } => return *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                t = if x[*feature] <= *threshold { left } else { right };
            }
        }
    }
}

/// Predictions for every row of `x`.
pub fn predict_tree_rows(t: &TreeNode, x: &Matrix) -> Result<Vec<f64>> {
    x.row_iter().map(|r| predict_tree(t, r)).collect()
}
