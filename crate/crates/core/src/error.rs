use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector has zero total mass")]
    ZeroMass,
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("probability vector needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("entries sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("class count mismatch: expected {expected}, got {actual}")]
    ClassMismatch { expected: usize, actual: usize },
    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid spec field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },
    #[error("schema error in {path}: {reason}")]
    Schema { path: PathBuf, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("class {class} has {available} target samples, {required} required")]
    InsufficientSamples {
        class: usize,
        available: usize,
        required: usize,
    },
    #[error("sample {id} has no label")]
    UnlabeledSample { id: u64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("duplicate sample id {0}")]
    DuplicateId(u64),

    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("prediction set is empty")]
    EmptyPredictions,
    #[error("predictions collapsed: class proportion {proportion:?}")]
    DegenerateClass { proportion: Vec<f64> },
    #[error("prior proportion entry {index} is {value}, must be positive")]
    InvalidProportion { index: usize, value: f64 },
    #[error("unknown sample id {0}")]
    UnknownId(u64),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("no ground truth for sample {0}")]
    MissingTruth(u64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid configuration `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn spec(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
