use crate::objects::ObjectKind;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid object: {0}")]
    InvalidObject(String),

    #[error("objects must share one tag, found {first} and {other}")]
    MixedTags { first: ObjectKind, other: ObjectKind },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric {metric} cannot be applied to {kind} objects")]
    IncompatibleMetric { metric: String, kind: ObjectKind },

    #[error("need at least {required} samples, got {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("sample size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("invalid distance matrix: {0}")]
    InvalidDistanceMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("a covariate column Z is required")]
    MissingCovariate,

    #[error("fewer than two distinct covariate values within bandwidth {bandwidth} of z = {z}")]
    EmptyWindow { z: f64, bandwidth: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of the numerical linear algebra rather than of the
    /// inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
