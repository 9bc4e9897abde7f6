use serde::{Deserialize, Serialize};

use crate::booster::{mean_loss, LossKind};
use crate::data::{Dataset, ResponseKind};
use crate::error::{GamiError, Result};
use crate::Predictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Rmse,
    Auc,
}

impl MetricKind {
    pub fn for_response(kind: ResponseKind) -> Self {
        match kind {
            ResponseKind::Continuous => MetricKind::Rmse,
            ResponseKind::Binary => MetricKind::Auc,
        }
    }
}

pub fn rmse(pred: &[f64], y: &[f64]) -> f64 {
    let sse: f64 = pred.iter().zip(y).map(|(p, y)| (p - y) * (p - y)).sum();
    (sse / y.len() as f64).sqrt()
}

/// Scores closer than this (relative to `max(1, |score|)`) count as tied in
/// [`auc`]. Tree models give many rows exactly equal scores; a rearranged
/// but equivalent model reproduces them only up to rounding.
pub const AUC_TIE_TOLERANCE: f64 = 1e-9;

/// Mann-Whitney AUC: the fraction of positive/negative pairs ranked
/// correctly, with tied scores counting one half. A tie group starts at the
/// lowest unassigned score and takes every score within
/// [`AUC_TIE_TOLERANCE`] of it.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(GamiError::UndefinedMetric("AUC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        let first = scores[order[start]];
        let width = AUC_TIE_TOLERANCE * first.abs().max(1.0);
        while end < order.len() && scores[order[end]] - first <= width {
            end += 1;
        }
        // 1-based ranks start+1..=end share their average
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i] == 1.0).count();
        pos_rank_sum += avg_rank * positives as f64;
        start = end;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// RMSE on the response scale for continuous data, AUC for binary data.
pub fn evaluate_metrics<P: Predictor + ?Sized>(model: &P, loss: LossKind, ds: &Dataset) -> Result<f64> {
    if loss != LossKind::for_response(ds.response_kind()) {
        return Err(GamiError::config(format!("{loss:?} model evaluated on {:?} data", ds.response_kind())));
    }
    let scores: Vec<f64> = ds.rows().map(|x| model.predict_link(x)).collect();
    match ds.response_kind() {
        ResponseKind::Continuous => Ok(rmse(&scores, ds.response())),
        ResponseKind::Binary => auc(&scores, ds.response()),
    }
}

/// Model-selection objective: RMSE for continuous data, mean log-loss for binary.
pub fn tuning_objective<P: Predictor + ?Sized>(model: &P, loss: LossKind, ds: &Dataset) -> f64 {
    let scores: Vec<f64> = ds.rows().map(|x| model.predict_link(x)).collect();
    match loss {
        LossKind::Squared => rmse(&scores, ds.response()),
        LossKind::Logistic => mean_loss(loss, ds.response(), &scores),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_hand_cases() {
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 0.75);
        assert_eq!(auc(&[4.0, 3.0, 2.0, 1.0], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(auc(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5; 6], &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn auc_matches_pair_enumeration() {
        let scores = [0.3, 0.3, 0.1, 0.9, 0.5, 0.3, 0.7, 0.1];
        let labels = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0];
        let (mut credit, mut pairs) = (0.0, 0.0);
        for i in 0..8 {
            for j in 0..8 {
                if labels[i] == 1.0 && labels[j] == 0.0 {
                    pairs += 1.0;
                    credit += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        assert!((auc(&scores, &labels).unwrap() - credit / pairs).abs() < 1e-15);
    }

    #[test]
    fn near_equal_scores_tie() {
        let labels = [0.0, 1.0, 0.0, 1.0];
        let exact = auc(&[0.2, 0.2, 0.7, 0.7], &labels).unwrap();
        let jittered = auc(&[0.2 + 1e-15, 0.2, 0.7, 0.7 - 2e-16], &labels).unwrap();
        assert_eq!(exact, 0.5);
        assert_eq!(jittered, exact);
    }

    #[test]
    fn single_class_auc_is_undefined() {
        assert!(matches!(auc(&[0.1, 0.2], &[1.0, 1.0]), Err(GamiError::UndefinedMetric(_))));
    }

    #[test]
    fn rmse_of_perfect_predictions_is_zero() {
        assert_eq!(rmse(&[1.0, -2.0, 3.5], &[1.0, -2.0, 3.5]), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]), 12.5f64.sqrt());
    }
}
