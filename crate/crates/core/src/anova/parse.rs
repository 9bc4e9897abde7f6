//! Exact re-expression of a constrained ensemble as additive terms.

use std::collections::{BTreeMap, BTreeSet};

use super::terms::{InteractionTerm, MainEffectTerm, TermStore};
use crate::booster::{LeafRegion, TreeEnsemble};
use crate::error::{GamiError, Result};

enum Target {
    Intercept,
    Main(usize),
    Pair(usize, usize),
}

fn classify(region: &LeafRegion) -> Result<Target> {
    let features: Vec<usize> = region.intervals.keys().copied().collect();
    match features[..] {
        [] => Ok(Target::Intercept),
        [j] => Ok(Target::Main(j)),
        [j, k] => Ok(Target::Pair(j, k)),
        _ => Err(GamiError::Structural(format!(
            "leaf path splits on {features:?}; at most two features are allowed"
        ))),
    }
}

fn is_empty(region: &LeafRegion) -> bool {
    region.intervals.values().any(|&(lo, hi)| lo >= hi)
}

fn add_bounds(set: &mut BTreeSet<u64>, (lo, hi): (f64, f64)) {
    for b in [lo, hi] {
        if b.is_finite() {
            set.insert(ordered_bits(b));
        }
    }
}

/// Order-preserving bit pattern so breaks can live in a `BTreeSet`.
fn ordered_bits(x: f64) -> u64 {
    let x = if x == 0.0 { 0.0 } else { x };
    let bits = x.to_bits();
    if bits >> 63 == 1 { !bits } else { bits | (1 << 63) }
}

fn from_ordered_bits(b: u64) -> f64 {
    f64::from_bits(if b >> 63 == 1 { b & !(1 << 63) } else { !b })
}

fn sorted_breaks(set: &BTreeSet<u64>) -> Vec<f64> {
    set.iter().map(|&b| from_ordered_bits(b)).collect()
}

/// Cells `first..=last` of a break list covered by the interval `(lo, hi]`.
fn cell_range(breaks: &[f64], (lo, hi): (f64, f64)) -> (usize, usize) {
    let locate = |b: f64| breaks.binary_search_by(|x| x.partial_cmp(&b).expect("finite break")).expect("interval bound is a break");
    let first = if lo == f64::NEG_INFINITY { 0 } else { locate(lo) + 1 };
    let last = if hi == f64::INFINITY { breaks.len() } else { locate(hi) };
    (first, last)
}

/// Walks every leaf once. A leaf whose branch splits on one feature adds its
/// value to that feature's step function over the branch interval; a branch
/// on two features adds it to the pair's grid over the branch rectangle; a
/// root leaf adds to the intercept. Break lists are the union of the interval
/// bounds seen per feature or axis. Every pair named in the ensemble's
/// constraints gets a term, even if no tree uses it.
pub fn parse_ensemble(ens: &TreeEnsemble) -> Result<TermStore> {
    let p = ens.n_features();
    let regions: Vec<LeafRegion> = ens
        .trees
        .iter()
        .flat_map(|t| t.leaf_regions())
        .filter(|r| !is_empty(r))
        .collect();

    let mut main_breaks: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); p];
    let mut pair_breaks: BTreeMap<(usize, usize), (BTreeSet<u64>, BTreeSet<u64>)> =
        ens.constraints.pairs().into_iter().map(|pair| (pair, Default::default())).collect();
    for region in &regions {
        match classify(region)? {
            Target::Intercept => {}
            Target::Main(j) => add_bounds(&mut main_breaks[j], region.intervals[&j]),
            Target::Pair(j, k) => {
                let (xb, yb) = pair_breaks.entry((j, k)).or_default();
                add_bounds(xb, region.intervals[&j]);
                add_bounds(yb, region.intervals[&k]);
            }
        }
    }

    let mut mains: Vec<MainEffectTerm> = main_breaks
        .iter()
        .enumerate()
        .map(|(j, set)| {
            let step_breaks = sorted_breaks(set);
            MainEffectTerm { step_values: vec![0.0; step_breaks.len() + 1], step_breaks, ..MainEffectTerm::zero(j) }
        })
        .collect();
    let mut interactions: Vec<InteractionTerm> = pair_breaks
        .iter()
        .map(|(&(j, k), (xb, yb))| {
            let x_breaks = sorted_breaks(xb);
            let y_breaks = sorted_breaks(yb);
            InteractionTerm {
                cell_values: vec![0.0; (x_breaks.len() + 1) * (y_breaks.len() + 1)],
                x_breaks,
                y_breaks,
                ..InteractionTerm::zero(j, k)
            }
        })
        .collect();
    let pair_slot: BTreeMap<(usize, usize), usize> =
        interactions.iter().enumerate().map(|(i, t)| ((t.j, t.k), i)).collect();

    let mut intercept = ens.base_score;
    for region in &regions {
        match classify(region)? {
            Target::Intercept => intercept += region.value,
            Target::Main(j) => {
                let term = &mut mains[j];
                let (first, last) = cell_range(&term.step_breaks, region.intervals[&j]);
                for v in &mut term.step_values[first..=last] {
                    *v += region.value;
                }
            }
            Target::Pair(j, k) => {
                let term = &mut interactions[pair_slot[&(j, k)]];
                let (r0, r1) = cell_range(&term.x_breaks, region.intervals[&j]);
                let (c0, c1) = cell_range(&term.y_breaks, region.intervals[&k]);
                let n_cols = term.n_cols();
                for a in r0..=r1 {
                    for v in &mut term.cell_values[a * n_cols + c0..=a * n_cols + c1] {
                        *v += region.value;
                    }
                }
            }
        }
    }

    Ok(TermStore { intercept, mains, interactions, loss: ens.loss })
}
