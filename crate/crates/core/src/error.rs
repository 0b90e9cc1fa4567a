use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by [`ErrorKind`] so front ends can map them onto
/// exit codes without matching every case.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest error in row {row}: {message}")]
    Ingest { row: usize, message: String },

    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("out of range: {0}")]
    Range(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error at layer {layer}: {message}")]
    Shape { layer: String, message: String },

    #[error("canonization error: {0}")]
    Canonization(String),

    #[error("weight file format error: {0}")]
    Format(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("zero denominator under the z-rule at layer {layer}, unit {unit}")]
    Singularity { layer: usize, unit: usize },

    #[error("rule assignment error: {0}")]
    Assignment(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is not finite")]
    Diverged { epoch: usize, batch: usize },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("degenerate correlation: {0}")]
    DegenerateCorrelation(String),

    #[error("missing input {path}: {hint}")]
    Dependency { path: PathBuf, hint: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Coarse classification of [`Error`] values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Assignment(_) | Error::Dependency { .. } => ErrorKind::Config,
            Error::Numeric(_)
            | Error::Normalization(_)
            | Error::Singularity { .. }
            | Error::Diverged { .. }
            | Error::UndefinedRatio(_)
            | Error::DegenerateCorrelation(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json { context: context.into(), source }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), message: message.into() }
    }

    pub(crate) fn shape(layer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Shape { layer: layer.into(), message: message.into() }
    }
}
