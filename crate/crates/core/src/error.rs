use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GamiError {
    /// A caller-supplied configuration value is out of range or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    /// A tree path touches more features than any allowed interaction set.
    #[error("structural violation: {0}")]
    Structural(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("pipeline stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<GamiError>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl GamiError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        GamiError::Config(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GamiError::InvalidData(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GamiError::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        GamiError::Parse { path: path.into(), message: message.to_string() }
    }

    /// Wraps an error with the pipeline stage it came from.
    pub fn at_stage(self, stage: &'static str) -> Self {
        GamiError::Stage { stage, source: Box::new(self) }
    }

    /// Innermost error, looking through stage wrappers.
    pub fn root(&self) -> &GamiError {
        match self {
            GamiError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, GamiError>;
