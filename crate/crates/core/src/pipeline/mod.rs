//! End-to-end fit: screen, filter, tune, fit, parse, purify, report.

mod metrics;

pub use metrics::{auc, AUC_TIE_TOLERANCE, evaluate_metrics, rmse, tuning_objective, MetricKind};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anova::{parse_ensemble, purify, term_importance, TermImportance, TermStore};
use crate::binning::bin_features;
use crate::booster::{fit_boosted, BoostConfig, ConstraintSpec, LossKind, TreeEnsemble};
use crate::data::{split_dataset, Dataset, SplitFractions};
use crate::error::{GamiError, Result};
use crate::filter::{fast_filter, fit_initial_gam, residuals, PairScore, DEFAULT_FAST_BINS};
use crate::Predictor;

/// Candidate values per hyperparameter; every combination is fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub reg_lambda: Vec<f64>,
    pub min_child_hessian: Vec<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    pub early_stopping_rounds: Option<usize>,
}

impl HyperGrid {
    /// 2000 trees with early stopping after 50, learning rate {0.03, 0.1},
    /// reg_lambda {0, 1}, min_child_hessian {1, 10}; depth 2, or 1 when no
    /// interactions are requested.
    pub fn default_for(k: usize) -> Self {
        Self {
            n_trees: vec![2000],
            max_depth: vec![if k == 0 { 1 } else { 2 }],
            learning_rate: vec![0.03, 0.1],
            reg_lambda: vec![0.0, 1.0],
            min_child_hessian: vec![1.0, 10.0],
            gamma: None,
            early_stopping_rounds: Some(50),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("n_trees", self.n_trees.len()),
            ("max_depth", self.max_depth.len()),
            ("learning_rate", self.learning_rate.len()),
            ("reg_lambda", self.reg_lambda.len()),
            ("min_child_hessian", self.min_child_hessian.len()),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, len)| *len == 0) {
            return Err(GamiError::config(format!("hyperparameter grid `{name}` is empty")));
        }
        for cfg in self.combinations() {
            cfg.validate()?;
        }
        Ok(())
    }

    /// Cartesian product in declaration order (the last field varies fastest).
    pub fn combinations(&self) -> Vec<BoostConfig> {
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &learning_rate in &self.learning_rate {
                    for &reg_lambda in &self.reg_lambda {
                        for &min_child_hessian in &self.min_child_hessian {
                            out.push(BoostConfig {
                                n_trees,
                                max_depth,
                                learning_rate,
                                reg_lambda,
                                gamma: self.gamma.unwrap_or(0.0),
                                min_child_hessian,
                                early_stopping_rounds: self.early_stopping_rounds,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Number of interaction pairs to keep.
    pub k: usize,
    /// `None` uses [`HyperGrid::default_for`].
    pub grid: Option<HyperGrid>,
    pub monotone: Vec<i8>,
    pub fractions: SplitFractions,
    pub seed: u64,
    pub fast_bins: usize,
    /// Settings for the main-effects screening fit (depth is forced to 1).
    pub screening: BoostConfig,
}

impl PipelineConfig {
    pub fn new(k: usize, monotone: Vec<i8>) -> Self {
        Self {
            k,
            grid: None,
            monotone,
            fractions: SplitFractions::default(),
            seed: 0,
            fast_bins: DEFAULT_FAST_BINS,
            screening: BoostConfig { max_depth: 1, ..BoostConfig::default() },
        }
    }

    pub fn effective_grid(&self) -> HyperGrid {
        self.grid.clone().unwrap_or_else(|| HyperGrid::default_for(self.k))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let max_pairs = p * p.saturating_sub(1) / 2;
        if self.k > max_pairs {
            return Err(GamiError::config(format!("k = {} but only {max_pairs} pairs exist for {p} features", self.k)));
        }
        if self.monotone.len() != p {
            return Err(GamiError::config(format!(
                "monotone spec has {} entries for {p} features",
                self.monotone.len()
            )));
        }
        if let Some(d) = self.monotone.iter().find(|d| !(-1..=1).contains(*d)) {
            return Err(GamiError::config(format!("monotone direction {d} not in {{-1, 0, 1}}")));
        }
        self.fractions.validate()?;
        self.screening.validate()?;
        self.effective_grid().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub config: BoostConfig,
    pub trees_used: usize,
    pub valid_objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub kind: MetricKind,
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedGami {
    /// Purified, centered decomposition.
    pub terms: TermStore,
    /// Decomposition straight out of parsing, before purification.
    pub parsed_terms: TermStore,
    pub ensemble: TreeEnsemble,
    pub selected_pairs: Vec<PairScore>,
    pub chosen: GridResult,
    pub grid: Vec<GridResult>,
    pub metrics: SplitMetrics,
    pub importances: Vec<TermImportance>,
}

/// Metrics of `model` on all three splits.
pub fn split_metrics<P: Predictor + ?Sized>(
    model: &P,
    loss: LossKind,
    train: &Dataset,
    valid: &Dataset,
    test: &Dataset,
) -> Result<SplitMetrics> {
    Ok(SplitMetrics {
        kind: MetricKind::for_response(train.response_kind()),
        train: evaluate_metrics(model, loss, train)?,
        valid: evaluate_metrics(model, loss, valid)?,
        test: evaluate_metrics(model, loss, test)?,
    })
}

/// Top-`k` interaction pairs from a depth-1 unconstrained screening fit.
pub fn select_pairs(train: &Dataset, valid: &Dataset, k: usize, cfg: &PipelineConfig) -> Result<Vec<PairScore>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let gam = fit_initial_gam(train, Some(valid), &cfg.screening).map_err(|e| e.at_stage("screen"))?;
    let resid = residuals(train, &gam).map_err(|e| e.at_stage("residuals"))?;
    let binned = bin_features(train, cfg.fast_bins).map_err(|e| e.at_stage("filter"))?;
    fast_filter(&resid, &binned, k).map_err(|e| e.at_stage("filter"))
}

/// Fits every grid combination on `train` (early-stopping on `valid`) and
/// returns all results plus the index of the winner: lowest validation
/// objective, then fewest trees, then grid order.
pub fn tune(train: &Dataset, valid: &Dataset, spec: &ConstraintSpec, grid: &HyperGrid) -> Result<(Vec<(GridResult, TreeEnsemble)>, usize)> {
    let fits: Vec<(GridResult, TreeEnsemble)> = grid
        .combinations()
        .par_iter()
        .map(|cfg| {
            let ens = fit_boosted(train, Some(valid), spec, cfg)?;
            let valid_objective = tuning_objective(&ens, ens.loss, valid);
            Ok((GridResult { config: cfg.clone(), trees_used: ens.trees.len(), valid_objective }, ens))
        })
        .collect::<Result<_>>()?;
    let best = (0..fits.len())
        .min_by(|&a, &b| {
            let (ra, rb) = (&fits[a].0, &fits[b].0);
            ra.valid_objective
                .total_cmp(&rb.valid_objective)
                .then(ra.trees_used.cmp(&rb.trees_used))
                .then(a.cmp(&b))
        })
        .ok_or_else(|| GamiError::config("hyperparameter grid is empty"))?;
    Ok((fits, best))
}

/// Runs the whole procedure on pre-split data.
pub fn run_pipeline(train: &Dataset, valid: &Dataset, test: &Dataset, cfg: &PipelineConfig) -> Result<FittedGami> {
    if !train.same_schema(valid) || !train.same_schema(test) {
        return Err(GamiError::config("train, valid and test sets must share columns and response kind"));
    }
    cfg.validate(train.n_features())?;

    let selected_pairs = select_pairs(train, valid, cfg.k, cfg)?;
    let pairs: Vec<(usize, usize)> = selected_pairs.iter().map(|s| (s.j, s.k)).collect();
    let spec = ConstraintSpec::with_pairs(cfg.monotone.clone(), &pairs)?;

    let (fits, best) = tune(train, valid, &spec, &cfg.effective_grid()).map_err(|e| e.at_stage("tune"))?;
    let grid: Vec<GridResult> = fits.iter().map(|(r, _)| r.clone()).collect();
    let (chosen, ensemble) = fits.into_iter().nth(best).expect("winner exists");

    let parsed_terms = parse_ensemble(&ensemble).map_err(|e| e.at_stage("parse"))?;
    let terms = purify(&parsed_terms, train).map_err(|e| e.at_stage("purify"))?;
    let importances = term_importance(&terms, train);
    let metrics = split_metrics(&ensemble, ensemble.loss, train, valid, test).map_err(|e| e.at_stage("evaluate"))?;

    Ok(FittedGami { terms, parsed_terms, ensemble, selected_pairs, chosen, grid, metrics, importances })
}

/// Splits `ds` with the configured fractions and seed, then runs the pipeline.
pub fn run_on_dataset(ds: &Dataset, cfg: &PipelineConfig) -> Result<(FittedGami, [Dataset; 3])> {
    let (train, valid, test) = split_dataset(ds, cfg.fractions, cfg.seed)?;
    let fitted = run_pipeline(&train, &valid, &test, cfg)?;
    Ok((fitted, [train, valid, test]))
}
