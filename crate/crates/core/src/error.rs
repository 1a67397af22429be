use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, CfaError>;

#[derive(Debug, Clone, PartialEq)]
pub enum CfaError {
    /// Malformed or out-of-range input.
    Input(String),
    /// A matrix required to be PSD is not.
    NotPsd { lambda_min: f64, lambda_max: f64 },
    /// A uniqueness vector lies outside the feasible set.
    Infeasible { lambda_min: f64, min_phi: f64 },
    /// An iterative solver hit its iteration cap. `best` is the last iterate.
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
}

impl CfaError {
    pub fn input(msg: impl Into<String>) -> Self {
        CfaError::Input(msg.into())
    }
}

impl fmt::Display for CfaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfaError::Input(msg) => write!(f, "invalid input: {msg}"),
            CfaError::NotPsd { lambda_min, lambda_max } => write!(
                f,
                "matrix is not positive semidefinite (lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e})"
            ),
            CfaError::Infeasible { lambda_min, min_phi } => write!(
                f,
                "phi is infeasible (lambda_min(sigma - diag(phi)) = {lambda_min:e}, min phi = {min_phi:e})"
            ),
            CfaError::Convergence {
                solver,
                iterations,
                residual,
                ..
            } => write!(
                f,
                "{solver} did not converge after {iterations} iterations (residual {residual:e})"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CfaError {}
