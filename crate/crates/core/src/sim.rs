//! Generators for the two simulation models used to exercise the pipeline.
//!
//! Both draw four features i.i.d. Uniform(-1, 1). A continuous response adds
//! N(0, sigma^2) noise to the signal; a binary response is Bernoulli with the
//! signal as its logit.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`. ChaCha8 output is specified independently of platform and
//! word size, so the same seed gives bit-identical datasets everywhere. Each
//! row consumes four uniforms followed by one noise draw (Gaussian via
//! `rand_distr::Normal`, or one uniform for the Bernoulli case).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ResponseKind};
use crate::error::{GamiError, Result};

pub const SIM_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    pub response_kind: ResponseKind,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(GamiError::config("simulation needs n >= 1"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(GamiError::config(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimModel {
    First,
    Second,
}

impl SimModel {
    pub fn signal(self, x: &[f64]) -> f64 {
        match self {
            SimModel::First => first_order_signal(x),
            SimModel::Second => second_order_signal(x),
        }
    }
}

/// Additive model: linear, hinge-up, hinge-down and a scaled tanh-like term.
pub fn first_order_signal(x: &[f64]) -> f64 {
    let [x1, x2, x3, x4] = [x[0], x[1], x[2], x[3]];
    let e = (6.0 * x4).exp();
    0.5 * x1 + if x2 > 0.0 { x2 } else { 0.0 } + if x3 < 0.0 { x3 } else { 0.0 } + 0.5 * (e - 1.0) / (1.0 + e)
}

/// Two pairwise interactions: `max(x1, x2)` and `x3 + x4 + x3*x4`.
pub fn second_order_signal(x: &[f64]) -> f64 {
    let [x1, x2, x3, x4] = [x[0], x[1], x[2], x[3]];
    x1.max(x2) + (x3 + x4 + x3 * x4)
}

pub fn generate(model: SimModel, cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.sigma).map_err(|e| GamiError::config(e.to_string()))?;
    let mut values = Vec::with_capacity(cfg.n * SIM_FEATURES);
    let mut response = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let start = values.len();
        for _ in 0..SIM_FEATURES {
            values.push(rng.random_range(-1.0..1.0));
        }
        let f = model.signal(&values[start..]);
        let y = match cfg.response_kind {
            ResponseKind::Continuous => f + noise.sample(&mut rng),
            ResponseKind::Binary => {
                let p = 1.0 / (1.0 + (-f).exp());
                if rng.random::<f64>() < p { 1.0 } else { 0.0 }
            }
        };
        response.push(y);
    }
    Dataset::new(values, SIM_FEATURES, response, Dataset::default_names(SIM_FEATURES), cfg.response_kind)
}

pub fn generate_first_order(cfg: &SimConfig) -> Result<Dataset> {
    generate(SimModel::First, cfg)
}

pub fn generate_second_order(cfg: &SimConfig) -> Result<Dataset> {
    generate(SimModel::Second, cfg)
}
