//! Interaction screening: a main-effects-only boosted fit, its residuals, and
//! FAST ranking of candidate feature pairs by the RSS reduction of the best
//! four-quadrant piecewise-constant model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::BinnedDataset;
use crate::booster::{fit_boosted, sigmoid, BoostConfig, ConstraintSpec, LossKind, TreeEnsemble, PROB_CLAMP};
use crate::data::{Dataset, ResponseKind};
use crate::error::{GamiError, Result};

/// Bins per feature for the FAST histograms.
pub const DEFAULT_FAST_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub j: usize,
    pub k: usize,
    pub score: f64,
}

/// Stumps only, one feature per tree, no monotone constraints.
pub fn fit_initial_gam(train: &Dataset, valid: Option<&Dataset>, cfg: &BoostConfig) -> Result<TreeEnsemble> {
    let cfg = BoostConfig { max_depth: 1, ..cfg.clone() };
    fit_boosted(train, valid, &ConstraintSpec::main_effects_only(train.n_features()), &cfg)
}

/// Logit-space residual for a binary response: `(y - p) / (p (1 - p))` with
/// `p` clamped to `[1e-6, 1 - 1e-6]`. This is `-g/h` of the logistic loss.
pub fn pseudo_residual(y: f64, p: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    (y - p) / (p * (1.0 - p))
}

/// `y - f(x)` for continuous responses, the pseudo-residual for binary ones.
pub fn residuals(ds: &Dataset, ens: &TreeEnsemble) -> Result<Vec<f64>> {
    if ens.loss != LossKind::for_response(ds.response_kind()) {
        return Err(GamiError::config(format!(
            "{:?} ensemble cannot produce residuals for a {:?} response",
            ens.loss,
            ds.response_kind()
        )));
    }
    let out = ds
        .rows()
        .zip(ds.response())
        .map(|(x, &y)| {
            let f = ens.predict(x);
            match ds.response_kind() {
                ResponseKind::Continuous => y - f,
                ResponseKind::Binary => pseudo_residual(y, sigmoid(f)),
            }
        })
        .collect();
    Ok(out)
}

/// Scores every feature pair and returns the `k` best, highest score first,
/// ties broken by `(j, k)`.
pub fn fast_filter(resid: &[f64], binned: &BinnedDataset, k: usize) -> Result<Vec<PairScore>> {
    let mut scores = score_all_pairs(resid, binned)?;
    if k > scores.len() {
        return Err(GamiError::config(format!(
            "requested {k} interactions but only {} pairs exist",
            scores.len()
        )));
    }
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then((a.j, a.k).cmp(&(b.j, b.k))));
    scores.truncate(k);
    Ok(scores)
}

/// Scores for all `p(p-1)/2` pairs in lexicographic order.
pub fn score_all_pairs(resid: &[f64], binned: &BinnedDataset) -> Result<Vec<PairScore>> {
    if resid.len() != binned.n_rows() {
        return Err(GamiError::invalid(format!(
            "{} residuals for {} binned rows",
            resid.len(),
            binned.n_rows()
        )));
    }
    if let Some(i) = resid.iter().position(|r| !r.is_finite()) {
        return Err(GamiError::invalid(format!("non-finite residual at row {i}")));
    }
    let p = binned.n_features();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|j| (j + 1..p).map(move |k| (j, k))).collect();

    // Centering makes the score exactly what it is for any shifted copy of the
    // residuals, up to the rounding of the mean itself.
    let constant = resid.iter().all(|&r| r == resid[0]);
    let mean = resid.iter().sum::<f64>() / resid.len().max(1) as f64;
    let centered: Vec<f64> = resid.iter().map(|r| r - mean).collect();

    Ok(pairs
        .par_iter()
        .map(|&(j, k)| PairScore {
            j,
            k,
            score: if constant { 0.0 } else { pair_score(&centered, binned, j, k) },
        })
        .collect())
}

/// Best four-quadrant RSS reduction for one pair.
///
/// A cut `(a, b)` sends bins `<= a` of feature `j` and bins `<= b` of feature
/// `k` to the low side. Each quadrant predicts its residual mean (an empty one
/// contributes nothing), so the reduction against the global mean is
/// `sum_q S_q^2 / n_q - S^2 / n`.
fn pair_score(resid: &[f64], binned: &BinnedDataset, j: usize, k: usize) -> f64 {
    let (bj, bk) = (binned.n_bins(j), binned.n_bins(k));
    if bj < 2 || bk < 2 {
        return 0.0;
    }
    // cumulative (count, sum) over bins <= (a, b)
    let mut cum = vec![(0.0f64, 0.0f64); bj * bk];
    for (i, &r) in resid.iter().enumerate() {
        let cell = &mut cum[binned.bin(i, j) * bk + binned.bin(i, k)];
        cell.0 += 1.0;
        cell.1 += r;
    }
    for a in 0..bj {
        for b in 0..bk {
            let mut acc = cum[a * bk + b];
            if a > 0 {
                let up = cum[(a - 1) * bk + b];
                acc.0 += up.0;
                acc.1 += up.1;
            }
            if b > 0 {
                let left = cum[a * bk + b - 1];
                acc.0 += left.0;
                acc.1 += left.1;
            }
            if a > 0 && b > 0 {
                let diag = cum[(a - 1) * bk + b - 1];
                acc.0 -= diag.0;
                acc.1 -= diag.1;
            }
            cum[a * bk + b] = acc;
        }
    }
    let total = cum[bj * bk - 1];
    let base = term(total);
    let mut best = 0.0f64;
    for a in 0..bj - 1 {
        let low_j = cum[a * bk + bk - 1];
        for b in 0..bk - 1 {
            let low_k = cum[(bj - 1) * bk + b];
            let ll = cum[a * bk + b];
            let lh = (low_j.0 - ll.0, low_j.1 - ll.1);
            let hl = (low_k.0 - ll.0, low_k.1 - ll.1);
            let hh = (total.0 - ll.0 - lh.0 - hl.0, total.1 - ll.1 - lh.1 - hl.1);
            let reduction = term(ll) + term(lh) + term(hl) + term(hh) - base;
            best = best.max(reduction);
        }
    }
    best
}

fn term((count, sum): (f64, f64)) -> f64 {
    if count > 0.5 { sum * sum / count } else { 0.0 }
}
