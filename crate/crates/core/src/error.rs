use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the classification library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}, column {column}: non-finite value {value:?}")]
    NonFinite {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: empty label")]
    EmptyLabel { row: usize },

    #[error("dataset has {found} distinct classes, at least 2 are required")]
    TooFewClasses { found: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("k = {k} is out of range for {available} training samples; use a smaller kpc")]
    KOutOfRange { k: usize, available: usize },

    #[error("k = {k} exceeds the {size} members of class {class:?}")]
    KExceedsClass { k: usize, class: String, size: usize },

    #[error("class {class:?} has no training samples")]
    EmptyClass { class: String },

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("repeat {repeat}, fold {fold}: {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
