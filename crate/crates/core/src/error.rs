use thiserror::Error;

/// Failures surfaced by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {what} is {value}, limit is {limit}")]
    Capacity {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not antisymmetric (defect {0:.3e})")]
    NotAntisymmetric(f64),

    #[error("matrix is not orthogonal (defect {0:.3e})")]
    NotOrthogonal(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid covariance matrix: singular value {0} exceeds 1")]
    InvalidCovariance(f64),

    #[error("degenerate normal modes: {0}")]
    DegenerateModes(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("requires a full eigendecomposition, got {got} of {dim} eigenpairs")]
    PartialEigenset { got: usize, dim: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
