//! Additive least-squares fits in a linear B-spline (hat function) basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{GamiError, Result};

/// Interior knots per feature; the two boundary knots sit at the train range.
pub const INTERIOR_KNOTS: usize = 20;

/// Diagonal penalty used when the normal equations are singular.
pub const RIDGE_FALLBACK: f64 = 1e-8;

/// Equally spaced knots over `[lo, hi]`, boundaries included. Empty when the
/// range is degenerate.
pub fn knot_grid(lo: f64, hi: f64) -> Vec<f64> {
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Vec::new();
    }
    let segments = (INTERIOR_KNOTS + 1) as f64;
    let mut knots: Vec<f64> = (0..=INTERIOR_KNOTS + 1).map(|i| lo + (hi - lo) * (i as f64 / segments)).collect();
    knots[INTERIOR_KNOTS + 1] = hi;
    knots
}

/// The (at most two) non-zero hat basis values at `x`.
fn hat_weights(knots: &[f64], x: f64) -> [(usize, f64); 2] {
    let m = knots.len();
    if x <= knots[0] {
        return [(0, 1.0), (0, 0.0)];
    }
    if x >= knots[m - 1] {
        return [(m - 1, 1.0), (m - 1, 0.0)];
    }
    let i = knots.partition_point(|&k| k <= x) - 1;
    let t = (x - knots[i]) / (knots[i + 1] - knots[i]);
    [(i, 1.0 - t), (i + 1, t)]
}

/// Fitted `constant + sum_f g_f(x_f)`, each `g_f` given by its hat
/// coefficients and constrained to have mean zero over the fitting rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveFit {
    pub constant: f64,
    pub coefs: Vec<Vec<f64>>,
}

impl AdditiveFit {
    /// Largest absolute coefficient, constant included.
    pub fn max_abs_coef(&self) -> f64 {
        self.coefs.iter().flatten().fold(self.constant.abs(), |m, c| m.max(c.abs()))
    }
}

/// Least-squares fit of `target ~ constant + sum_f g_f(columns[f])`.
///
/// Identifiability: each `g_f` is written in centered hat columns
/// `B_a - mean(B_a)` with the last basis function dropped, so every fitted
/// `g_f` averages to zero over the rows and the constant carries the mean.
/// The normal equations are solved by Cholesky with one round of iterative
/// refinement; if they are singular a ridge of [`RIDGE_FALLBACK`] is added.
pub fn fit_additive(columns: &[&[f64]], knots: &[&[f64]], target: &[f64]) -> Result<AdditiveFit> {
    let n = target.len();
    if n == 0 {
        return Err(GamiError::invalid("spline fit on zero rows"));
    }
    let widths: Vec<usize> = knots.iter().map(|k| k.len().saturating_sub(1)).collect();
    let dim = 1 + widths.iter().sum::<usize>();

    let mut design = DMatrix::<f64>::zeros(n, dim);
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    let mut offset = 1;
    for ((col, kn), &w) in columns.iter().zip(knots).zip(&widths) {
        let mut sums = vec![0.0; w + 1];
        if w > 0 {
            for (i, &x) in col.iter().enumerate() {
                for (a, v) in hat_weights(kn, x) {
                    sums[a] += v;
                    if a < w {
                        design[(i, offset + a)] += v;
                    }
                }
            }
        }
        let mean: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
        for a in 0..w {
            for i in 0..n {
                design[(i, offset + a)] -= mean[a];
            }
        }
        means.push(mean);
        offset += w;
    }
    for i in 0..n {
        design[(i, 0)] = 1.0;
    }

    let y = DVector::from_column_slice(target);
    let gram = design.transpose() * &design;
    let factor = match gram.clone().cholesky() {
        Some(c) => c,
        None => {
            let ridged = &gram + DMatrix::<f64>::identity(dim, dim) * RIDGE_FALLBACK;
            ridged
                .cholesky()
                .ok_or_else(|| GamiError::invalid("spline normal equations singular even with ridge"))?
        }
    };
    let mut beta = factor.solve(&(design.transpose() * &y));
    let resid = &y - &design * &beta;
    beta += factor.solve(&(design.transpose() * resid));

    let mut coefs = Vec::with_capacity(columns.len());
    let mut offset = 1;
    for (w, mean) in widths.iter().zip(&means) {
        if *w == 0 {
            coefs.push(Vec::new());
            continue;
        }
        let b = beta.rows(offset, *w);
        let shift: f64 = b.iter().zip(mean).map(|(c, m)| c * m).sum();
        let mut hat: Vec<f64> = b.iter().map(|c| c - shift).collect();
        hat.push(-shift);
        coefs.push(hat);
        offset += w;
    }
    Ok(AdditiveFit { constant: beta[0], coefs })
}
