use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("quasi-momentum {0} outside [0, 2pi)")]
    Theta(f64),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("lambda = {lambda} lies within {distance:e} of eigenvalue #{k} = {eigenvalue}")]
    NearSpectrum {
        lambda: Complex64,
        k: usize,
        eigenvalue: f64,
        distance: f64,
    },
    #[error("inadmissible probe: {0}")]
    Inadmissible(String),
    #[error("guard violated: {0}")]
    Guard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
