//! Depth-limited regression trees and their exact greedy, constrained growth.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::constraints::{allowed_split_features, ConstraintSpec};
use super::BoostConfig;
use crate::data::Dataset;
use crate::error::{GamiError, Result};

/// One node of a flattened tree. `x[feature] <= threshold` routes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { leaf_value: f64 },
}

/// Nodes in pre-order; `nodes[0]` is the root. Leaf values already carry the
/// learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

/// The box of feature space reaching one leaf: per split feature, the
/// half-open interval `(lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafRegion {
    pub value: f64,
    pub intervals: BTreeMap<usize, (f64, f64)>,
}

impl LeafRegion {
    pub fn features(&self) -> BTreeSet<usize> {
        self.intervals.keys().copied().collect()
    }
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self { nodes: vec![Node::Leaf { leaf_value: value }] }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Leaf { leaf_value } => return leaf_value,
                Node::Split { feature, threshold, left, right } => {
                    idx = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// All leaves with the region of feature space that reaches them.
    pub fn leaf_regions(&self) -> Vec<LeafRegion> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, BTreeMap::new())];
        while let Some((idx, intervals)) = stack.pop() {
            match self.nodes[idx] {
                Node::Leaf { leaf_value } => out.push(LeafRegion { value: leaf_value, intervals }),
                Node::Split { feature, threshold, left, right } => {
                    let (lo, hi) = intervals
                        .get(&feature)
                        .copied()
                        .unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
                    let mut right_iv = intervals.clone();
                    right_iv.insert(feature, (lo.max(threshold), hi));
                    let mut left_iv = intervals;
                    left_iv.insert(feature, (lo, hi.min(threshold)));
                    stack.push((right, right_iv));
                    stack.push((left, left_iv));
                }
            }
        }
        out
    }

    /// Checks that the node array encodes a tree: children point forward,
    /// every non-root node has exactly one parent, values are finite and
    /// features exist.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(GamiError::invalid("tree has no nodes"));
        }
        let mut parents = vec![0usize; self.nodes.len()];
        for (idx, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Leaf { leaf_value } => {
                    if !leaf_value.is_finite() {
                        return Err(GamiError::invalid(format!("node {idx}: non-finite leaf value")));
                    }
                }
                Node::Split { feature, threshold, left, right } => {
                    if feature >= n_features {
                        return Err(GamiError::invalid(format!("node {idx}: feature {feature} >= {n_features}")));
                    }
                    if !threshold.is_finite() {
                        return Err(GamiError::invalid(format!("node {idx}: non-finite threshold")));
                    }
                    for child in [left, right] {
                        if child <= idx || child >= self.nodes.len() {
                            return Err(GamiError::invalid(format!("node {idx}: bad child index {child}")));
                        }
                        parents[child] += 1;
                    }
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&c| c != 1) {
            return Err(GamiError::invalid("node array is not a tree"));
        }
        Ok(())
    }
}

/// Column-major copy of the training features with each column's row order
/// sorted by value, built once per fit.
pub struct SortedColumns {
    columns: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(ds: &Dataset) -> Self {
        let columns: Vec<Vec<f64>> = (0..ds.n_features()).map(|j| ds.column(j)).collect();
        let order = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { columns, order }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

/// Leaf weight `-G / (H + lambda)`, or 0 when the denominator vanishes.
pub fn newton_weight(g: f64, h: f64, reg_lambda: f64) -> f64 {
    let denom = h + reg_lambda;
    if denom > 0.0 { -g / denom } else { 0.0 }
}

/// Reduction in the second-order objective from using weight `w` at a node:
/// `-(2 G w + (H + lambda) w^2)`. Equals `G^2 / (H + lambda)` at the
/// unconstrained optimum.
fn node_score(g: f64, h: f64, w: f64, reg_lambda: f64) -> f64 {
    -(2.0 * g * w + (h + reg_lambda) * w * w)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    left_weight: f64,
    right_weight: f64,
}

struct Grower<'a> {
    cols: &'a SortedColumns,
    grad: &'a [f64],
    hess: &'a [f64],
    spec: &'a ConstraintSpec,
    cfg: &'a BoostConfig,
    nodes: Vec<Node>,
}

/// Grows one tree by exact greedy search over midpoints of adjacent distinct
/// feature values.
///
/// Monotone features are handled with the reject-plus-bounds scheme: a split
/// on an increasing feature is rejected unless the (bound-clipped) left
/// weight is at most the right weight, and once accepted the midpoint of the
/// two weights caps the left subtree and floors the right subtree. Candidate
/// features at each node are limited to those that keep the branch's feature
/// set inside one interaction set.
pub fn grow_tree(
    cols: &SortedColumns,
    grad: &[f64],
    hess: &[f64],
    spec: &ConstraintSpec,
    cfg: &BoostConfig,
) -> Tree {
    if cols.n_rows() == 0 {
        return Tree::leaf(0.0);
    }
    let root_features = allowed_split_features(&BTreeSet::new(), spec);
    let lists: Vec<(usize, Vec<u32>)> =
        root_features.iter().map(|&f| (f, cols.order[f].clone())).collect();
    let mut grower = Grower { cols, grad, hess, spec, cfg, nodes: Vec::new() };
    let all_rows: Vec<u32> = (0..cols.n_rows() as u32).collect();
    grower.grow(&all_rows, lists, BTreeSet::new(), 0, f64::NEG_INFINITY, f64::INFINITY);
    Tree { nodes: grower.nodes }
}

impl Grower<'_> {
    fn grow(
        &mut self,
        rows: &[u32],
        lists: Vec<(usize, Vec<u32>)>,
        path: BTreeSet<usize>,
        depth: usize,
        lower: f64,
        upper: f64,
    ) -> usize {
        let (g_sum, h_sum) = rows.iter().fold((0.0, 0.0), |(g, h), &i| {
            (g + self.grad[i as usize], h + self.hess[i as usize])
        });
        let weight = newton_weight(g_sum, h_sum, self.cfg.reg_lambda).clamp(lower, upper);
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { leaf_value: weight * self.cfg.learning_rate });

        if rows.is_empty() || depth >= self.cfg.max_depth || h_sum < self.cfg.min_child_hessian {
            return idx;
        }
        let Some(best) = self.best_split(&lists, g_sum, h_sum, weight, lower, upper) else {
            return idx;
        };

        let column = &self.cols.columns[best.feature];
        let goes_left = |i: &u32| column[*i as usize] <= best.threshold;
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows.iter().copied().partition(goes_left);

        let mut child_path = path;
        child_path.insert(best.feature);
        let child_features = allowed_split_features(&child_path, self.spec);
        let mut left_lists = Vec::with_capacity(child_features.len());
        let mut right_lists = Vec::with_capacity(child_features.len());
        for (f, list) in lists {
            if child_features.binary_search(&f).is_ok() {
                let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(goes_left);
                left_lists.push((f, l));
                right_lists.push((f, r));
            }
        }

        let (mut left_bounds, mut right_bounds) = ((lower, upper), (lower, upper));
        let mid = 0.5 * (best.left_weight + best.right_weight);
        match self.spec.monotone[best.feature] {
            1 => {
                left_bounds.1 = mid;
                right_bounds.0 = mid;
            }
            -1 => {
                left_bounds.0 = mid;
                right_bounds.1 = mid;
            }
            _ => {}
        }

        let left = self.grow(&left_rows, left_lists, child_path.clone(), depth + 1, left_bounds.0, left_bounds.1);
        let right = self.grow(&right_rows, right_lists, child_path, depth + 1, right_bounds.0, right_bounds.1);
        self.nodes[idx] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        idx
    }

    /// Highest positive-gain admissible split. Features are visited in
    /// ascending order and thresholds in ascending order, and only a strictly
    /// larger gain replaces the incumbent, so ties go to the lowest feature
    /// index and then the lowest threshold.
    fn best_split(
        &self,
        lists: &[(usize, Vec<u32>)],
        g_sum: f64,
        h_sum: f64,
        parent_weight: f64,
        lower: f64,
        upper: f64,
    ) -> Option<Candidate> {
        let lambda = self.cfg.reg_lambda;
        let min_h = self.cfg.min_child_hessian;
        let parent_score = node_score(g_sum, h_sum, parent_weight, lambda);
        let mut best: Option<Candidate> = None;
        for (feature, list) in lists {
            let column = &self.cols.columns[*feature];
            let direction = self.spec.monotone[*feature];
            let (mut g_left, mut h_left) = (0.0, 0.0);
            for pair in list.windows(2) {
                let (i, next) = (pair[0] as usize, pair[1] as usize);
                g_left += self.grad[i];
                h_left += self.hess[i];
                let (v, v_next) = (column[i], column[next]);
                if v >= v_next {
                    continue;
                }
                let (g_right, h_right) = (g_sum - g_left, h_sum - h_left);
                if h_left < min_h || h_right < min_h {
                    continue;
                }
                let w_left = newton_weight(g_left, h_left, lambda).clamp(lower, upper);
                let w_right = newton_weight(g_right, h_right, lambda).clamp(lower, upper);
                if (direction == 1 && w_left > w_right) || (direction == -1 && w_left < w_right) {
                    continue;
                }
                let gain = 0.5
                    * (node_score(g_left, h_left, w_left, lambda) + node_score(g_right, h_right, w_right, lambda)
                        - parent_score)
                    - self.cfg.gamma;
                if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate {
                        feature: *feature,
                        threshold: midpoint(v, v_next),
                        gain,
                        left_weight: w_left,
                        right_weight: w_right,
                    });
                }
            }
        }
        best
    }
}

/// A threshold `t` with `a <= t < b`, as close to the midpoint as rounding allows.
fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + 0.5 * (b - a);
    if t >= b { a } else { t }
}
