//! Additive decomposition of a fitted ensemble: parsing into terms,
//! purification, importances, audits and plot-grid export.

mod audit;
mod export;
mod parse;
mod purify;
mod spline;
mod terms;

pub use audit::{
    check_monotone, check_monotone_full, orthogonality_audit, term_importance, MonotoneReport, MonotoneViolation,
    PairOrthogonality, TermImportance, STORE_MONOTONE_TOLERANCE,
};
pub use export::{export_terms, TermEntry, TermManifest, INTERACTION_GRID, MAIN_GRID};
pub use parse::parse_ensemble;
pub use purify::{purify, train_knots};
pub use spline::{fit_additive, knot_grid, AdditiveFit, INTERIOR_KNOTS, RIDGE_FALLBACK};
pub use terms::{piecewise_linear, InteractionTerm, MainEffectTerm, MainEffectsView, TermId, TermStore};
