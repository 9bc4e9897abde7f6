//! Monotone directions and interaction sets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{GamiError, Result};

/// Per-feature monotone direction (-1, 0, +1) plus the family of feature sets
/// a single tree branch may draw its split features from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub monotone: Vec<i8>,
    pub interaction_sets: Vec<Vec<usize>>,
}

impl ConstraintSpec {
    /// Singletons for every feature followed by the given pairs.
    pub fn with_pairs(monotone: Vec<i8>, pairs: &[(usize, usize)]) -> Result<Self> {
        let p = monotone.len();
        let mut sets: Vec<Vec<usize>> = (0..p).map(|j| vec![j]).collect();
        for &(a, b) in pairs {
            sets.push(vec![a.min(b), a.max(b)]);
        }
        let spec = Self { monotone, interaction_sets: sets };
        spec.validate()?;
        Ok(spec)
    }

    /// Main effects only, no monotone constraints.
    pub fn main_effects_only(p: usize) -> Self {
        Self {
            monotone: vec![0; p],
            interaction_sets: (0..p).map(|j| vec![j]).collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.monotone.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.monotone.len();
        if p == 0 {
            return Err(GamiError::config("constraint spec has no features"));
        }
        if let Some(d) = self.monotone.iter().find(|d| !(-1..=1).contains(*d)) {
            return Err(GamiError::config(format!("monotone direction {d} not in {{-1, 0, 1}}")));
        }
        for set in &self.interaction_sets {
            if let Some(&f) = set.iter().find(|&&f| f >= p) {
                return Err(GamiError::config(format!("interaction set {set:?} names feature {f} >= {p}")));
            }
            let distinct: BTreeSet<usize> = set.iter().copied().collect();
            if distinct.len() != set.len() || !(1..=2).contains(&set.len()) {
                return Err(GamiError::config(format!(
                    "interaction set {set:?} must hold one or two distinct features"
                )));
            }
        }
        for j in 0..p {
            if !self.interaction_sets.iter().any(|s| s.as_slice() == [j]) {
                return Err(GamiError::config(format!("feature {j} has no singleton interaction set")));
            }
        }
        Ok(())
    }

    /// Two-feature sets as sorted `(j, k)` pairs, deduplicated, in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let pairs: BTreeSet<(usize, usize)> = self
            .interaction_sets
            .iter()
            .filter(|s| s.len() == 2)
            .map(|s| (s[0].min(s[1]), s[0].max(s[1])))
            .collect();
        pairs.into_iter().collect()
    }

    /// Whether a branch splitting on exactly these features is permitted.
    pub fn permits(&self, features: &BTreeSet<usize>) -> bool {
        features.is_empty()
            || self.interaction_sets.iter().any(|s| features.iter().all(|f| s.contains(f)))
    }
}

/// Every feature `f` for which `path ∪ {f}` is a subset of some interaction
/// set, in ascending order. A branch's feature set must be fully contained in
/// one set; overlap with several sets does not widen the choice.
pub fn allowed_split_features(path: &BTreeSet<usize>, spec: &ConstraintSpec) -> Vec<usize> {
    let mut allowed = BTreeSet::new();
    for set in &spec.interaction_sets {
        if path.iter().all(|f| set.contains(f)) {
            allowed.extend(set.iter().copied());
        }
    }
    allowed.into_iter().collect()
}
