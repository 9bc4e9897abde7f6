//! Term importances and post-fit audits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::purify::train_knots;
use super::spline::fit_additive;
use super::terms::{TermId, TermStore};
use crate::data::Dataset;
use crate::error::Result;
use crate::Predictor;

/// Largest decrease tolerated when sweeping a [`TermStore`] rather than the
/// ensemble itself. The store agrees with the ensemble to 1e-8 at every
/// point and the ensemble is exactly monotone, so only a drop beyond twice
/// that bound is evidence of a real violation; smaller ones are rounding in
/// the rearranged sum.
pub const STORE_MONOTONE_TOLERANCE: f64 = 2e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermImportance {
    pub term: TermId,
    pub importance: f64,
}

/// Sample standard deviation of each term over the train rows, largest
/// first; ties keep term order (mains by feature, then pairs).
pub fn term_importance(store: &TermStore, train: &Dataset) -> Vec<TermImportance> {
    let mut out: Vec<TermImportance> = store
        .term_ids()
        .into_iter()
        .map(|term| {
            let values: Vec<f64> = train.rows().map(|x| store.eval_term(term, x)).collect();
            TermImportance { term, importance: sample_sd(&values) }
        })
        .collect();
    out.sort_by(|a, b| b.importance.total_cmp(&a.importance).then(a.term.cmp(&b.term)));
    out
}

pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneViolation {
    pub feature: usize,
    pub anchor: Vec<f64>,
    pub from: f64,
    pub to: f64,
    /// How far the prediction moved against the required direction.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub features: Vec<usize>,
    pub lines_per_feature: usize,
    pub grid_points: usize,
    pub tolerance: f64,
    pub n_violations: usize,
    pub max_magnitude: f64,
    /// The first few violations, in sweep order.
    pub examples: Vec<MonotoneViolation>,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.n_violations == 0
    }
}

const MAX_EXAMPLES: usize = 20;

/// Sweeps each constrained feature across its range along `n_lines` random
/// anchor lines of `n_grid` points and records every adjacent step that goes
/// against the required direction by more than `tolerance`. Anchors are drawn
/// uniformly from `bounds` with a seeded ChaCha8 generator.
pub fn check_monotone<P: Predictor + ?Sized>(
    model: &P,
    monotone: &[i8],
    bounds: &[(f64, f64)],
    n_lines: usize,
    n_grid: usize,
    seed: u64,
    tolerance: f64,
) -> MonotoneReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features: Vec<usize> = (0..monotone.len()).filter(|&j| monotone[j] != 0).collect();
    let mut report = MonotoneReport {
        features: features.clone(),
        lines_per_feature: n_lines,
        grid_points: n_grid,
        tolerance,
        n_violations: 0,
        max_magnitude: 0.0,
        examples: Vec::new(),
    };
    let mut x = vec![0.0; bounds.len()];
    for &f in &features {
        let (lo, hi) = bounds[f];
        let grid: Vec<f64> = (0..n_grid)
            .map(|i| if n_grid == 1 { lo } else { lo + (hi - lo) * (i as f64 / (n_grid - 1) as f64) })
            .collect();
        let sign = f64::from(monotone[f]);
        for _ in 0..n_lines {
            for (v, &(a, b)) in x.iter_mut().zip(bounds) {
                *v = if a < b { rng.random_range(a..=b) } else { a };
            }
            let anchor = x.clone();
            let mut prev: Option<f64> = None;
            for (g, &xf) in grid.iter().enumerate() {
                x[f] = xf;
                let value = model.predict_link(&x);
                if let Some(p) = prev {
                    let against = sign * (p - value);
                    if against > tolerance {
                        report.n_violations += 1;
                        report.max_magnitude = report.max_magnitude.max(against);
                        if report.examples.len() < MAX_EXAMPLES {
                            report.examples.push(MonotoneViolation {
                                feature: f,
                                anchor: anchor.clone(),
                                from: grid[g - 1],
                                to: xf,
                                magnitude: against,
                            });
                        }
                    }
                }
                prev = Some(value);
            }
        }
    }
    report
}

/// Monotonicity of the full decomposed model (every term summed), with
/// [`STORE_MONOTONE_TOLERANCE`].
pub fn check_monotone_full(
    store: &TermStore,
    monotone: &[i8],
    bounds: &[(f64, f64)],
    n_lines: usize,
    n_grid: usize,
    seed: u64,
) -> MonotoneReport {
    check_monotone(store, monotone, bounds, n_lines, n_grid, seed, STORE_MONOTONE_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOrthogonality {
    pub j: usize,
    pub k: usize,
    /// Largest coefficient of a main-effect spline refit to the interaction,
    /// divided by the interaction's importance.
    pub norm: f64,
}

/// Refits the purification spline model to each interaction's train values.
/// A hierarchically orthogonal interaction has nothing left for it to pick up.
pub fn orthogonality_audit(store: &TermStore, train: &Dataset) -> Result<Vec<PairOrthogonality>> {
    let knots = train_knots(train);
    let mut out = Vec::with_capacity(store.interactions.len());
    for term in &store.interactions {
        let (j, k) = (term.j, term.k);
        let values: Vec<f64> = train.rows().map(|x| term.eval_row(x)).collect();
        let norm = if values.iter().all(|&v| v == 0.0) {
            0.0
        } else {
            let fit = fit_additive(&[&train.column(j), &train.column(k)], &[&knots[j], &knots[k]], &values)?;
            let largest = fit.max_abs_coef();
            if largest == 0.0 { 0.0 } else { largest / sample_sd(&values) }
        };
        out.push(PairOrthogonality { j, k, norm });
    }
    Ok(out)
}
