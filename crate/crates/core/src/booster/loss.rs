//! Losses in link space and their first two derivatives.

use serde::{Deserialize, Serialize};

use crate::data::ResponseKind;

/// Clamp applied to probabilities wherever a logit or a pseudo-residual
/// denominator would otherwise blow up.
pub const PROB_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `0.5 * (pred - y)^2`
    Squared,
    /// Negative Bernoulli log-likelihood with a logit link.
    Logistic,
}

impl LossKind {
    pub fn for_response(kind: ResponseKind) -> Self {
        match kind {
            ResponseKind::Continuous => LossKind::Squared,
            ResponseKind::Binary => LossKind::Logistic,
        }
    }

    pub fn response_kind(self) -> ResponseKind {
        match self {
            LossKind::Squared => ResponseKind::Continuous,
            LossKind::Logistic => ResponseKind::Binary,
        }
    }

    pub fn loss(self, y: f64, pred: f64) -> f64 {
        match self {
            LossKind::Squared => 0.5 * (pred - y) * (pred - y),
            LossKind::Logistic => softplus(pred) - y * pred,
        }
    }

    /// `(dloss/dpred, d2loss/dpred2)`; the second derivative is never negative.
    pub fn grad_hess(self, y: f64, pred: f64) -> (f64, f64) {
        match self {
            LossKind::Squared => (pred - y, 1.0),
            LossKind::Logistic => {
                let p = sigmoid(pred);
                (p - y, p * (1.0 - p))
            }
        }
    }

    /// Link-space optimum of a constant model.
    pub fn base_score(self, y: &[f64]) -> f64 {
        if y.is_empty() {
            return 0.0;
        }
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        match self {
            LossKind::Squared => mean,
            LossKind::Logistic => {
                let p = mean.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                (p / (1.0 - p)).ln()
            }
        }
    }

    /// Maps a link-space score to the response scale.
    pub fn inverse_link(self, score: f64) -> f64 {
        match self {
            LossKind::Squared => score,
            LossKind::Logistic => sigmoid(score),
        }
    }
}

pub fn loss_grad_hess(kind: LossKind, y: f64, pred: f64) -> (f64, f64) {
    kind.grad_hess(y, pred)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
