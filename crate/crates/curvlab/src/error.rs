use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("frame is not orthonormal (defect {0:.3e})")]
    NotOrthonormal(f64),
    #[error("matrix is not orthogonal (defect {0:.3e})")]
    NotOrthogonal(f64),
    #[error("operator matrix is not symmetric (defect {0:.3e})")]
    Asymmetric(f64),
    #[error("angular function leaves [0, pi/2] at s = {s} (theta = {theta})")]
    ClassViolation { s: f64, theta: f64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("infeasible constants: {0}")]
    Infeasible(String),
    #[error("singular profile: {0}")]
    Singular(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CurvError>;
