use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid partition {0:?}: parts must be weakly decreasing")]
    InvalidPartition(Vec<usize>),
    #[error("inner partition is not contained in the outer one")]
    NotContained,
    #[error("cell ({0}, {1}) is not a cell of the shape")]
    CellOutside(usize, usize),
    #[error("Kac-Dynkin labels require mu_1 <= s (mu_1 = {mu1}, s = {s})")]
    KacDynkinRange { mu1: usize, s: usize },
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("color {0} out of range")]
    ColorOutOfRange(usize),
    #[error("evaluation at a pole near v = {0}")]
    Pole(Complex64),
    #[error("singular root configuration: {0}")]
    SingularRoots(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("operator dimension {dim} exceeds the cap {cap}")]
    SizeCap { dim: usize, cap: usize },
    #[error("contour passes too close to a zero or pole")]
    DegenerateContour,
    #[error("nonpositive Y value encountered")]
    NonPositiveY,
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
