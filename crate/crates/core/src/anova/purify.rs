//! Moves main-effect content out of the parsed interaction surfaces.

use super::spline::{fit_additive, knot_grid};
use super::terms::{MainEffectTerm, TermStore};
use crate::data::Dataset;
use crate::error::{GamiError, Result};

fn add_coefs(knots: &mut Vec<f64>, coefs: &mut Vec<f64>, new_knots: &[f64], delta: &[f64], sign: f64) -> Result<()> {
    if knots.is_empty() {
        *knots = new_knots.to_vec();
        *coefs = vec![0.0; new_knots.len()];
    } else if knots.as_slice() != new_knots {
        return Err(GamiError::config(
            "spline knots differ from an earlier purification; purify with the same train set",
        ));
    }
    for (c, d) in coefs.iter_mut().zip(delta) {
        *c += sign * d;
    }
    Ok(())
}

/// Per-feature knot grids over the train range.
pub fn train_knots(train: &Dataset) -> Vec<Vec<f64>> {
    train.feature_ranges().into_iter().map(|(lo, hi)| knot_grid(lo, hi)).collect()
}

/// For each interaction in `(j, k)` order: evaluate it on the train rows, fit
/// `constant + g_j(x_j) + g_k(x_k)` in the hat basis, add `g_j`, `g_k` to the
/// main effects and the constant to the intercept, and subtract all three
/// from the interaction. Every main effect is then shifted to train mean
/// zero, with the shift absorbed by the intercept.
///
/// The rearrangement is exact: full-model predictions change only by rounding.
pub fn purify(store: &TermStore, train: &Dataset) -> Result<TermStore> {
    if train.n_features() != store.mains.len() {
        return Err(GamiError::config(format!(
            "train set has {} features, term store has {}",
            train.n_features(),
            store.mains.len()
        )));
    }
    let knots = train_knots(train);
    let columns: Vec<Vec<f64>> = (0..train.n_features()).map(|j| train.column(j)).collect();
    let mut out = store.clone();

    for idx in 0..out.interactions.len() {
        let (j, k) = (out.interactions[idx].j, out.interactions[idx].k);
        let target: Vec<f64> = train.rows().map(|x| out.interactions[idx].eval_row(x)).collect();
        if target.iter().all(|&v| v == 0.0) {
            continue;
        }
        let fit = fit_additive(&[&columns[j], &columns[k]], &[&knots[j], &knots[k]], &target)?;
        out.intercept += fit.constant;
        for (feature, coefs) in [(j, &fit.coefs[0]), (k, &fit.coefs[1])] {
            if coefs.is_empty() {
                continue;
            }
            let main = &mut out.mains[feature];
            add_coefs(&mut main.spline_knots, &mut main.spline_coefs, &knots[feature], coefs, 1.0)?;
        }
        let term = &mut out.interactions[idx];
        for v in &mut term.cell_values {
            *v -= fit.constant;
        }
        if !fit.coefs[0].is_empty() {
            add_coefs(&mut term.offset_knots_j, &mut term.offset_coefs_j, &knots[j], &fit.coefs[0], -1.0)?;
        }
        if !fit.coefs[1].is_empty() {
            add_coefs(&mut term.offset_knots_k, &mut term.offset_coefs_k, &knots[k], &fit.coefs[1], -1.0)?;
        }
    }

    center_mains(&mut out, &columns);
    Ok(out)
}

fn center_mains(store: &mut TermStore, columns: &[Vec<f64>]) {
    for main in &mut store.mains {
        let col = &columns[main.feature];
        let mean = col.iter().map(|&x| main.eval(x)).sum::<f64>() / col.len() as f64;
        shift_main(main, -mean);
        store.intercept += mean;
    }
}

fn shift_main(main: &mut MainEffectTerm, delta: f64) {
    for v in &mut main.step_values {
        *v += delta;
    }
}
