//! Plot-ready grids for every term plus a JSON manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::audit::TermImportance;
use super::terms::{TermId, TermStore};
use crate::booster::LossKind;
use crate::error::{GamiError, Result};
use crate::json::to_canonical_string;

pub const MAIN_GRID: usize = 201;
pub const INTERACTION_GRID: usize = 51;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub term: TermId,
    pub name: String,
    pub importance: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermManifest {
    pub intercept: f64,
    pub loss: LossKind,
    /// In importance order.
    pub terms: Vec<TermEntry>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * (i as f64 / (n - 1) as f64) }).collect()
}

fn file_safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| GamiError::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out).and_then(|_| out.flush()).map_err(|e| GamiError::io(path, e))
}

/// Writes `main_<name>.csv` (`x,value`, 201 points) per main effect and
/// `inter_<a>_<b>.csv` (`x,y,value`, 51 x 51) per interaction over the given
/// per-feature ranges, then `terms.json` listing them with importances.
pub fn export_terms(
    store: &TermStore,
    ranges: &[(f64, f64)],
    feature_names: &[String],
    importances: &[TermImportance],
    dir: &Path,
) -> Result<TermManifest> {
    std::fs::create_dir_all(dir).map_err(|e| GamiError::io(dir, e))?;
    let mut terms = Vec::with_capacity(importances.len());
    for imp in importances {
        let (name, file) = match imp.term {
            TermId::Main { feature } => {
                let name = feature_names[feature].clone();
                let file = format!("main_{}.csv", file_safe(&name));
                let main = &store.mains[feature];
                let (lo, hi) = ranges[feature];
                write_file(&dir.join(&file), |out| {
                    writeln!(out, "x,value")?;
                    for x in linspace(lo, hi, MAIN_GRID) {
                        writeln!(out, "{x},{}", main.eval(x))?;
                    }
                    Ok(())
                })?;
                (name, file)
            }
            TermId::Interaction { j, k } => {
                let name = format!("{}:{}", feature_names[j], feature_names[k]);
                let file = format!("inter_{}_{}.csv", file_safe(&feature_names[j]), file_safe(&feature_names[k]));
                let term = store
                    .interaction(j, k)
                    .ok_or_else(|| GamiError::invalid(format!("no interaction term for ({j}, {k})")))?;
                let xs = linspace(ranges[j].0, ranges[j].1, INTERACTION_GRID);
                let ys = linspace(ranges[k].0, ranges[k].1, INTERACTION_GRID);
                write_file(&dir.join(&file), |out| {
                    writeln!(out, "x,y,value")?;
                    for &x in &xs {
                        for &y in &ys {
                            writeln!(out, "{x},{y},{}", term.eval(x, y))?;
                        }
                    }
                    Ok(())
                })?;
                (name, file)
            }
        };
        terms.push(TermEntry { term: imp.term, name, importance: imp.importance, file });
    }
    let manifest = TermManifest { intercept: store.intercept, loss: store.loss, terms };
    let path = dir.join("terms.json");
    let text = to_canonical_string(&manifest).map_err(|e| GamiError::invalid(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| GamiError::io(&path, e))?;
    Ok(manifest)
}
