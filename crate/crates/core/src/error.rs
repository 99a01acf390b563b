//! Error type shared by all numerical operations.

use thiserror::Error;

/// Errors produced by grid construction, spectral operations, quadrature and
/// the fixed-point solver.
#[derive(Error, Debug)]
pub enum Error {
    /// Two operands live on different spatial or temporal grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A parameter is outside its documented admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A Fourier multiplier evaluated to a non-finite value on the grid.
    #[error("non-finite multiplier value at xi = {xi}")]
    NonFiniteMultiplier { xi: f64 },

    /// Oscillatory-integral self-convergence check failed: doubling the panel
    /// count still moved the answer by more than the requested tolerance.
    #[error("quadrature self-convergence failure: achieved {achieved:.3e}, required {required:.3e}")]
    QuadratureNotConverged { achieved: f64, required: f64 },

    /// Picard iteration hit the iteration cap before the residual target.
    #[error("fixed-point iteration did not converge: residual history {history:?}")]
    NonConvergence { history: Vec<f64> },

    /// Picard iteration residuals grew; retry with a shorter existence time.
    #[error(
        "fixed-point iteration diverged (history {history:?}); retry with time length <= {suggested_t}"
    )]
    Divergence { history: Vec<f64>, suggested_t: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A serialized field or report failed structural validation.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
