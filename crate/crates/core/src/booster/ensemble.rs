use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::constraints::ConstraintSpec;
use super::loss::LossKind;
use super::tree::{grow_tree, SortedColumns, Tree};
use super::BoostConfig;
use crate::data::Dataset;
use crate::error::{GamiError, Result};
use crate::json::to_canonical_string;
use crate::Predictor;

/// Intercept plus a sequence of trees; the prediction is their sum in link space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub base_score: f64,
    pub loss: LossKind,
    pub learning_rate: f64,
    pub constraints: ConstraintSpec,
    pub trees: Vec<Tree>,
}

impl TreeEnsemble {
    pub fn n_features(&self) -> usize {
        self.constraints.n_features()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().fold(self.base_score, |acc, t| acc + t.predict(x))
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Vec<f64> {
        ds.rows().map(|x| self.predict(x)).collect()
    }

    /// Model JSON: single line, keys sorted.
    pub fn to_json(&self) -> String {
        to_canonical_string(self).expect("ensemble serializes")
    }

    /// Parses and validates model JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        let ens: TreeEnsemble =
            serde_json::from_str(text).map_err(|e| GamiError::invalid(format!("model JSON: {e}")))?;
        ens.validate()?;
        Ok(ens)
    }

    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        if !self.base_score.is_finite() {
            return Err(GamiError::invalid("non-finite base_score"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(GamiError::invalid(format!("learning_rate {} not in (0, 1]", self.learning_rate)));
        }
        let p = self.n_features();
        for (t, tree) in self.trees.iter().enumerate() {
            tree.validate(p).map_err(|e| GamiError::invalid(format!("tree {t}: {e}")))?;
        }
        Ok(())
    }
}

impl Predictor for TreeEnsemble {
    fn n_features(&self) -> usize {
        TreeEnsemble::n_features(self)
    }

    fn predict_link(&self, x: &[f64]) -> f64 {
        self.predict(x)
    }
}

pub fn predict_ensemble(ens: &TreeEnsemble, x: &[f64]) -> f64 {
    ens.predict(x)
}

/// Mean loss of link-space predictions.
pub fn mean_loss(loss: LossKind, y: &[f64], pred: &[f64]) -> f64 {
    y.iter().zip(pred).map(|(&y, &f)| loss.loss(y, f)).sum::<f64>() / y.len() as f64
}

/// Boosts trees on `train`, optionally early-stopping on `valid`.
///
/// The ensemble starts from the link-space optimum of a constant model. When
/// early stopping is configured, fitting stops once the validation loss has
/// not improved for that many consecutive trees and the ensemble is cut back
/// to the tree count with the lowest validation loss (possibly zero trees).
pub fn fit_boosted(
    train: &Dataset,
    valid: Option<&Dataset>,
    spec: &ConstraintSpec,
    cfg: &BoostConfig,
) -> Result<TreeEnsemble> {
    cfg.validate()?;
    spec.validate()?;
    if spec.n_features() != train.n_features() {
        return Err(GamiError::config(format!(
            "constraints cover {} features, data has {}",
            spec.n_features(),
            train.n_features()
        )));
    }
    if let Some(v) = valid {
        if !v.same_schema(train) {
            return Err(GamiError::config("train and valid sets have different schemas"));
        }
    }
    let stopping = match (cfg.early_stopping_rounds, valid) {
        (Some(rounds), Some(v)) => Some((rounds, v)),
        (Some(_), None) => {
            return Err(GamiError::config("early stopping requested without a validation set"));
        }
        (None, _) => None,
    };

    let loss = LossKind::for_response(train.response_kind());
    let y = train.response();
    let base_score = loss.base_score(y);
    let cols = SortedColumns::new(train);
    let mut pred = vec![base_score; train.n_rows()];
    let mut grad = vec![0.0; train.n_rows()];
    let mut hess = vec![0.0; train.n_rows()];

    let mut valid_pred = stopping.map(|(_, v)| vec![base_score; v.n_rows()]);
    let mut best_loss = stopping.map_or(f64::INFINITY, |(_, v)| mean_loss(loss, v.response(), valid_pred.as_ref().unwrap()));
    let mut best_count = 0;

    let mut trees = Vec::new();
    for _ in 0..cfg.n_trees {
        for i in 0..y.len() {
            (grad[i], hess[i]) = loss.grad_hess(y[i], pred[i]);
        }
        let tree = grow_tree(&cols, &grad, &hess, spec, cfg);
        for (i, row) in train.rows().enumerate() {
            pred[i] += tree.predict(row);
        }
        trees.push(tree);

        if let (Some((rounds, v)), Some(vp)) = (stopping, valid_pred.as_mut()) {
            let tree = trees.last().unwrap();
            for (p, row) in vp.iter_mut().zip(v.rows()) {
                *p += tree.predict(row);
            }
            let current = mean_loss(loss, v.response(), vp);
            if current < best_loss {
                best_loss = current;
                best_count = trees.len();
            } else if trees.len() - best_count >= rounds {
                break;
            }
        }
    }
    if stopping.is_some() {
        trees.truncate(best_count);
    }

    Ok(TreeEnsemble {
        base_score,
        loss,
        learning_rate: cfg.learning_rate,
        constraints: spec.clone(),
        trees,
    })
}

/// A leaf whose branch splits on a feature set outside every interaction set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintViolation {
    pub tree: usize,
    pub features: Vec<usize>,
}

/// Structural audit: every root-to-leaf feature set must sit inside one
/// interaction set of the ensemble's own constraints.
pub fn audit_constraints(ens: &TreeEnsemble) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    for (t, tree) in ens.trees.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for region in tree.leaf_regions() {
            let features = region.features();
            if !ens.constraints.permits(&features) && seen.insert(features.clone()) {
                out.push(ConstraintViolation { tree: t, features: features.into_iter().collect() });
            }
        }
    }
    out
}
