//! Per-feature quantile binning, used by the FAST histogram search.

use crate::data::Dataset;
use crate::error::{GamiError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDataset {
    /// Row-major bin indices.
    bin_index: Vec<u16>,
    n_features: usize,
    /// Strictly increasing cut values per feature; bin `b` holds
    /// `edges[b-1] < x <= edges[b]`.
    bin_edges: Vec<Vec<f64>>,
}

impl BinnedDataset {
    pub fn n_rows(&self) -> usize {
        self.bin_index.len() / self.n_features
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn bin(&self, row: usize, feature: usize) -> usize {
        self.bin_index[row * self.n_features + feature] as usize
    }

    pub fn edges(&self, feature: usize) -> &[f64] {
        &self.bin_edges[feature]
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.bin_edges[feature].len() + 1
    }

    /// Builds a binned view directly from bin indices (used by tests and
    /// oracles that do not start from real-valued data).
    pub fn from_indices(bin_index: Vec<u16>, n_features: usize, n_bins: &[usize]) -> Result<Self> {
        if n_features == 0 || !bin_index.len().is_multiple_of(n_features) || n_bins.len() != n_features {
            return Err(GamiError::invalid("bin index matrix shape mismatch"));
        }
        for (pos, &b) in bin_index.iter().enumerate() {
            if b as usize >= n_bins[pos % n_features] {
                return Err(GamiError::invalid(format!("bin {b} out of range at position {pos}")));
            }
        }
        let bin_edges = n_bins.iter().map(|&k| (1..k).map(|e| e as f64 - 0.5).collect()).collect();
        Ok(Self { bin_index, n_features, bin_edges })
    }
}

/// Bin index of `x` given ascending edges: the number of edges strictly below `x`.
pub fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e < x)
}

/// Lower-interpolation empirical quantile edges at ranks k/B, k = 1..B-1.
/// Duplicates and edges at or above the maximum (which would leave an empty
/// top bin) are dropped, so a constant feature yields no edges at all.
pub fn quantile_edges(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    let max = sorted[n - 1];
    let mut edges: Vec<f64> = Vec::with_capacity(n_bins.saturating_sub(1));
    for k in 1..n_bins {
        let rank = ((n - 1) * k) / n_bins;
        let edge = sorted[rank];
        if edge < max && edges.last().is_none_or(|&last| edge > last) {
            edges.push(edge);
        }
    }
    edges
}

pub fn bin_features(ds: &Dataset, n_bins: usize) -> Result<BinnedDataset> {
    if n_bins < 2 {
        return Err(GamiError::config(format!("bin count must be at least 2, got {n_bins}")));
    }
    if n_bins > u16::MAX as usize {
        return Err(GamiError::config(format!("bin count {n_bins} too large")));
    }
    let p = ds.n_features();
    let bin_edges: Vec<Vec<f64>> = (0..p).map(|j| quantile_edges(&ds.column(j), n_bins)).collect();
    let mut bin_index = Vec::with_capacity(ds.n_rows() * p);
    for row in ds.rows() {
        for (j, &x) in row.iter().enumerate() {
            bin_index.push(bin_of(&bin_edges[j], x) as u16);
        }
    }
    Ok(BinnedDataset { bin_index, n_features: p, bin_edges })
}
