use thiserror::Error;

/// Errors raised across the lab.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("system spectrum is degenerate: eigenvalues {0} and {1} closer than tolerance {2}")]
    DegenerateSpectrum(f64, f64, f64),
    #[error("system eigenvalues are not sorted increasingly at position {0}")]
    UnsortedSpectrum(usize),
    #[error("eigenbasis is not unitary (max deviation {0:e})")]
    NonUnitaryBasis(f64),
    #[error("coupling matrix is not Hermitian (max deviation {0:e})")]
    NonHermitianCoupling(f64),
    #[error("spectral density is negative ({value}) at omega = {omega}")]
    NegativeDensity { omega: f64, value: f64 },
    #[error("invalid spectral density: {0}")]
    InvalidDensity(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("integral diverges: {0}")]
    DivergentIntegral(String),
    #[error("tail too heavy: {0}")]
    TailTooHeavy(String),
    #[error(
        "leading eigenvalue is not simple ({multiplicity} eigenvalues within {tol:e} of {value})"
    )]
    DegenerateLeadingEigenvalue {
        value: String,
        multiplicity: usize,
        tol: f64,
    },
    #[error("Dyson series not converged: last order changed entries by {0:e}")]
    SeriesNotConverged(f64),
    #[error("truncated space of dimension {dim} exceeds the budget {budget}")]
    DimensionBudgetExceeded { dim: usize, budget: usize },
    #[error("propagation tolerance failure: {0}")]
    PropagationToleranceFailure(String),
    #[error("horizon n = {0} too large for exhaustive enumeration (max {1})")]
    HorizonTooLarge(usize, usize),
    #[error("cluster with {0} members exceeds the enumeration limit {1}")]
    ClusterTooLarge(usize, usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
