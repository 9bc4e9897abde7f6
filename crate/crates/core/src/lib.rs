//! Monotone GAMI-Tree: gradient-boosted trees fit under hard monotonicity and
//! pairwise interaction constraints, then re-expressed as an intercept, main
//! effects and purified two-way interactions.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`], [`binning`], [`sim`]: datasets, quantile binning and the two
//!   simulation models.
//! * [`booster`]: Newton boosting of depth-limited trees with monotone and
//!   interaction constraints.
//! * [`filter`]: the main-effects-only fit, residuals and FAST pair ranking.
//! * [`anova`]: parsing an ensemble into terms, purification, importances,
//!   audits and plot-grid export.
//! * [`pipeline`]: end-to-end orchestration and metrics.

pub mod anova;
pub mod binning;
pub mod booster;
pub mod data;
pub mod error;
pub mod filter;
pub mod json;
pub mod pipeline;
pub mod sim;

pub use error::{GamiError, Result};

/// Anything that maps a feature vector to a link-space score.
pub trait Predictor {
    fn n_features(&self) -> usize;

    fn predict_link(&self, x: &[f64]) -> f64;
}
