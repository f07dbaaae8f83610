use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("operator has dimension zero")]
    EmptyOperator,

    #[error("operator is zero")]
    ZeroOperator,

    #[error("operator is not positive semi-definite (eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("distinct eigenvalue index {index} out of range ({count} available)")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("perturbation too large for the series: |E|/gap = {ratio} (limit {limit})")]
    SeriesDivergence { ratio: f64, limit: f64 },

    #[error("target eigenvalue has multiplicity {0}, a rank-one target is required")]
    MultiplicityNotOne(usize),

    #[error("bias correction breakdown: 1 + b = {value} is below the floor {floor}")]
    CorrectionFloor { value: f64, floor: f64 },

    #[error("probability {0} is outside (0, 1)")]
    Probability(f64),

    #[error("sample is empty")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
