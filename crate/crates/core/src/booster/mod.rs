//! Newton boosting of depth-limited trees under monotone and interaction
//! constraints.

mod constraints;
mod ensemble;
mod loss;
mod tree;

pub use constraints::{allowed_split_features, ConstraintSpec};
pub use ensemble::{audit_constraints, fit_boosted, mean_loss, predict_ensemble, ConstraintViolation, TreeEnsemble};
pub use loss::{loss_grad_hess, sigmoid, LossKind, PROB_CLAMP};
pub use tree::{grow_tree, newton_weight, LeafRegion, Node, SortedColumns, Tree};

use serde::{Deserialize, Serialize};

use crate::error::{GamiError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub reg_lambda: f64,
    /// Minimum gain a split must exceed.
    pub gamma: f64,
    pub min_child_hessian: f64,
    /// Stop after this many trees without a validation improvement.
    pub early_stopping_rounds: Option<usize>,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_trees: 2000,
            max_depth: 2,
            learning_rate: 0.1,
            reg_lambda: 1.0,
            gamma: 0.0,
            min_child_hessian: 1.0,
            early_stopping_rounds: Some(50),
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(GamiError::config("n_trees must be >= 1"));
        }
        if self.max_depth == 0 {
            return Err(GamiError::config("max_depth must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(GamiError::config(format!("learning_rate {} not in (0, 1]", self.learning_rate)));
        }
        if !(self.reg_lambda >= 0.0 && self.reg_lambda.is_finite()) {
            return Err(GamiError::config(format!("reg_lambda {} must be >= 0", self.reg_lambda)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(GamiError::config(format!("gamma {} must be >= 0", self.gamma)));
        }
        if !(self.min_child_hessian >= 0.0 && self.min_child_hessian.is_finite()) {
            return Err(GamiError::config(format!(
                "min_child_hessian {} must be >= 0",
                self.min_child_hessian
            )));
        }
        if self.early_stopping_rounds == Some(0) {
            return Err(GamiError::config("early_stopping_rounds must be >= 1 when set"));
        }
        Ok(())
    }
}
