//! In-memory datasets, seeded splitting and the CSV interchange format.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GamiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseKind {
    Continuous,
    Binary,
}

/// Dense n×p feature matrix (row-major) with a response column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n_features: usize,
    response: Vec<f64>,
    feature_names: Vec<String>,
    response_kind: ResponseKind,
}

impl Dataset {
    /// Builds a dataset from row-major feature values.
    pub fn new(
        values: Vec<f64>,
        n_features: usize,
        response: Vec<f64>,
        feature_names: Vec<String>,
        response_kind: ResponseKind,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(GamiError::invalid("dataset needs at least one feature"));
        }
        if response.is_empty() {
            return Err(GamiError::invalid("dataset needs at least one row"));
        }
        if values.len() != response.len() * n_features {
            return Err(GamiError::invalid(format!(
                "feature matrix has {} values, expected {} rows x {} features",
                values.len(),
                response.len(),
                n_features
            )));
        }
        if feature_names.len() != n_features {
            return Err(GamiError::invalid(format!(
                "{} feature names for {} features",
                feature_names.len(),
                n_features
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(GamiError::invalid(format!(
                "non-finite feature value at row {}, column {}",
                pos / n_features,
                pos % n_features
            )));
        }
        match response_kind {
            ResponseKind::Continuous => {
                if response.iter().any(|y| !y.is_finite()) {
                    return Err(GamiError::invalid("non-finite response value"));
                }
            }
            ResponseKind::Binary => {
                if response.iter().any(|&y| y != 0.0 && y != 1.0) {
                    return Err(GamiError::invalid("binary response must contain only 0 and 1"));
                }
            }
        }
        Ok(Self { values, n_features, response, feature_names, response_kind })
    }

    /// Default names `x1..xp`.
    pub fn default_names(p: usize) -> Vec<String> {
        (1..=p).map(|j| format!("x{j}")).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_features)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_features + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn response_kind(&self) -> ResponseKind {
        self.response_kind
    }

    /// Per-feature `(min, max)` over the rows.
    pub fn feature_ranges(&self) -> Vec<(f64, f64)> {
        (0..self.n_features)
            .map(|j| {
                self.rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[j]), hi.max(r[j]))
                })
            })
            .collect()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.n_features);
        let mut response = Vec::with_capacity(rows.len());
        for &i in rows {
            values.extend_from_slice(self.row(i));
            response.push(self.response[i]);
        }
        Self::new(values, self.n_features, response, self.feature_names.clone(), self.response_kind)
    }

    /// True when both datasets have the same columns and response kind.
    pub fn same_schema(&self, other: &Dataset) -> bool {
        self.n_features == other.n_features
            && self.feature_names == other.feature_names
            && self.response_kind == other.response_kind
    }

    /// Reads the `x1,...,xp,y` CSV format. The response kind is given by the
    /// caller; binary files must hold only 0/1 responses.
    pub fn read_csv(path: &Path, kind: ResponseKind) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| GamiError::parse(path, e))?;
        let headers = reader.headers().map_err(|e| GamiError::parse(path, e))?.clone();
        if headers.len() < 2 {
            return Err(GamiError::parse(path, "need at least one feature column and a response"));
        }
        let p = headers.len() - 1;
        let names: Vec<String> = headers.iter().take(p).map(str::to_owned).collect();
        let mut values = Vec::new();
        let mut response = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| GamiError::parse(path, e))?;
            if record.len() != p + 1 {
                return Err(GamiError::parse(path, format!("row {} has {} fields", line + 1, record.len())));
            }
            for (c, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    GamiError::parse(path, format!("row {}, column {}: `{field}` is not a number", line + 1, c + 1))
                })?;
                if c < p {
                    values.push(v);
                } else {
                    response.push(v);
                }
            }
        }
        Self::new(values, p, response, names, kind).map_err(|e| GamiError::parse(path, e))
    }

    /// Infers the response kind from the file: binary iff every response is 0 or 1.
    pub fn read_csv_infer(path: &Path) -> Result<Self> {
        let ds = Self::read_csv(path, ResponseKind::Continuous)?;
        if ds.response.iter().all(|&y| y == 0.0 || y == 1.0) {
            let Dataset { values, n_features, response, feature_names, .. } = ds;
            return Self::new(values, n_features, response, feature_names, ResponseKind::Binary);
        }
        Ok(ds)
    }

    /// Writes the header `x1,...,xp,y` followed by one row per observation.
    /// Reals use the shortest representation that parses back to the same
    /// `f64`, so a write/read cycle is lossless.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| GamiError::io(path, e))?;
        let mut out = BufWriter::new(file);
        let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(out, "{},y", self.feature_names.join(","))?;
            for (row, y) in self.rows().zip(&self.response) {
                for v in row {
                    write!(out, "{v},")?;
                }
                match self.response_kind {
                    ResponseKind::Binary => writeln!(out, "{}", *y as u8)?,
                    ResponseKind::Continuous => writeln!(out, "{y}")?,
                }
            }
            out.flush()
        };
        write(&mut out).map_err(|e| GamiError::io(path, e))
    }
}

/// Train/valid/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.5, valid: 0.25, test: 0.25 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(GamiError::config(format!("split fractions must be positive, got {parts:?}")));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(GamiError::config(format!("split fractions sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Row counts for `n` rows: valid and test are rounded down, train takes
    /// the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let valid = (n as f64 * self.valid).floor() as usize;
        let test = (n as f64 * self.test).floor() as usize;
        (n - valid - test, valid, test)
    }
}

/// Seeded shuffle followed by a contiguous cut into train/valid/test. Each
/// part keeps the original relative row order.
pub fn split_dataset(
    ds: &Dataset,
    fractions: SplitFractions,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    fractions.validate()?;
    let (n_train, n_valid, _) = fractions.sizes(ds.n_rows());
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, rest) = order.split_at_mut(n_train);
    let (valid, test) = rest.split_at_mut(n_valid);
    for part in [&mut *train, &mut *valid, &mut *test] {
        part.sort_unstable();
    }
    let pick = |rows: &[usize]| -> Result<Dataset> {
        if rows.is_empty() {
            return Err(GamiError::config(format!(
                "split of {} rows with {fractions:?} leaves an empty part",
                ds.n_rows()
            )));
        }
        ds.subset(rows)
    };
    Ok((pick(train)?, pick(valid)?, pick(test)?))
}
