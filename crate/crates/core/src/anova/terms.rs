//! The additive decomposition: intercept, per-feature main effects and
//! per-pair interaction surfaces.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::binning::bin_of;
use crate::booster::LossKind;
use crate::Predictor;

/// Continuous piecewise-linear function through `(knots[i], coefs[i])`,
/// constant beyond the outer knots. Equivalently a sum of degree-1 B-spline
/// (hat) basis functions with these coefficients. No knots means zero.
pub fn piecewise_linear(knots: &[f64], coefs: &[f64], x: f64) -> f64 {
    let m = knots.len();
    if m == 0 {
        return 0.0;
    }
    if x <= knots[0] {
        return coefs[0];
    }
    if x >= knots[m - 1] {
        return coefs[m - 1];
    }
    let i = knots.partition_point(|&k| k <= x) - 1;
    let t = (x - knots[i]) / (knots[i + 1] - knots[i]);
    coefs[i] * (1.0 - t) + coefs[i + 1] * t
}

/// `f_j(x_j)`: a step function from the trees plus a spline picked up
/// during purification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainEffectTerm {
    pub feature: usize,
    pub step_breaks: Vec<f64>,
    /// One value per interval; interval `i` is `(breaks[i-1], breaks[i]]`.
    pub step_values: Vec<f64>,
    pub spline_knots: Vec<f64>,
    pub spline_coefs: Vec<f64>,
}

impl MainEffectTerm {
    pub fn zero(feature: usize) -> Self {
        Self {
            feature,
            step_breaks: Vec::new(),
            step_values: vec![0.0],
            spline_knots: Vec::new(),
            spline_coefs: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.step_values[bin_of(&self.step_breaks, x)] + piecewise_linear(&self.spline_knots, &self.spline_coefs, x)
    }
}

/// `f_jk(x_j, x_k)` with `j < k`: a rectangular grid of constants plus one
/// piecewise-linear offset per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTerm {
    pub j: usize,
    pub k: usize,
    pub x_breaks: Vec<f64>,
    pub y_breaks: Vec<f64>,
    /// Row-major `(x_breaks.len() + 1) x (y_breaks.len() + 1)`.
    pub cell_values: Vec<f64>,
    pub offset_knots_j: Vec<f64>,
    pub offset_coefs_j: Vec<f64>,
    pub offset_knots_k: Vec<f64>,
    pub offset_coefs_k: Vec<f64>,
}

impl InteractionTerm {
    pub fn zero(j: usize, k: usize) -> Self {
        Self {
            j,
            k,
            x_breaks: Vec::new(),
            y_breaks: Vec::new(),
            cell_values: vec![0.0],
            offset_knots_j: Vec::new(),
            offset_coefs_j: Vec::new(),
            offset_knots_k: Vec::new(),
            offset_coefs_k: Vec::new(),
        }
    }

    pub fn n_cols(&self) -> usize {
        self.y_breaks.len() + 1
    }

    pub fn cell(&self, a: usize, b: usize) -> f64 {
        self.cell_values[a * self.n_cols() + b]
    }

    pub fn grid_value(&self, xj: f64, xk: f64) -> f64 {
        self.cell(bin_of(&self.x_breaks, xj), bin_of(&self.y_breaks, xk))
    }

    pub fn eval(&self, xj: f64, xk: f64) -> f64 {
        self.grid_value(xj, xk)
            + piecewise_linear(&self.offset_knots_j, &self.offset_coefs_j, xj)
            + piecewise_linear(&self.offset_knots_k, &self.offset_coefs_k, xk)
    }

    pub fn eval_row(&self, x: &[f64]) -> f64 {
        self.eval(x[self.j], x[self.k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TermId {
    Main { feature: usize },
    Interaction { j: usize, k: usize },
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermId::Main { feature } => write!(f, "x{}", feature + 1),
            TermId::Interaction { j, k } => write!(f, "x{}:x{}", j + 1, k + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStore {
    pub intercept: f64,
    pub mains: Vec<MainEffectTerm>,
    /// Sorted by `(j, k)`.
    pub interactions: Vec<InteractionTerm>,
    pub loss: LossKind,
}

impl TermStore {
    pub fn term_ids(&self) -> Vec<TermId> {
        self.mains
            .iter()
            .map(|m| TermId::Main { feature: m.feature })
            .chain(self.interactions.iter().map(|t| TermId::Interaction { j: t.j, k: t.k }))
            .collect()
    }

    pub fn interaction(&self, j: usize, k: usize) -> Option<&InteractionTerm> {
        self.interactions.iter().find(|t| t.j == j && t.k == k)
    }

    /// Value of one term at a full feature vector.
    pub fn eval_term(&self, id: TermId, x: &[f64]) -> f64 {
        match id {
            TermId::Main { feature } => self.mains[feature].eval(x[feature]),
            TermId::Interaction { j, k } => self.interaction(j, k).map_or(0.0, |t| t.eval(x[j], x[k])),
        }
    }

    pub fn eval_mains(&self, x: &[f64]) -> f64 {
        self.mains.iter().fold(self.intercept, |acc, m| acc + m.eval(x[m.feature]))
    }

    /// Full model in link space.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.interactions.iter().fold(self.eval_mains(x), |acc, t| acc + t.eval_row(x))
    }
}

impl Predictor for TermStore {
    fn n_features(&self) -> usize {
        self.mains.len()
    }

    fn predict_link(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// The intercept plus main effects only, with every interaction dropped.
pub struct MainEffectsView<'a>(pub &'a TermStore);

impl Predictor for MainEffectsView<'_> {
    fn n_features(&self) -> usize {
        self.0.mains.len()
    }

    fn predict_link(&self, x: &[f64]) -> f64 {
        self.0.eval_mains(x)
    }
}
