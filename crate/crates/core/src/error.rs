use thiserror::Error;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: parity class, parameter window, malformed config.
    Validation,
    /// A numerical procedure failed or a certification check did not hold.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("Fourier cutoff {cutoff} is too small: need at least {required}")]
    CutoffTooSmall { cutoff: usize, required: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("eigensolver failed at k = {k}: residual {residual:e}, condition estimate {condition:e}")]
    EigenNonConvergence { k: f64, residual: f64, condition: f64 },
    #[error("no Dirac crossing: {0}")]
    NoCrossing(String),
    #[error("degenerate crossing: {0}")]
    DegenerateCrossing(String),
    #[error("gap does not open: {0}")]
    GapNotOpen(String),
    #[error("ODE integration failed: {0}")]
    Integration(String),
    #[error("linear solve failed: {0}")]
    Singular(String),
    #[error("Newton iteration failed after {iters} iterations: residual history {history:?}")]
    NewtonDivergence { iters: usize, history: Vec<f64> },
    #[error("Newton converged to a trivial solution (norm {norm:e})")]
    TrivialSolution { norm: f64 },
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("regression mismatch: {0}")]
    Regression(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidPotential(_)
            | Error::CutoffTooSmall { .. }
            | Error::InvalidParameter(_)
            | Error::ShapeMismatch(_)
            | Error::Config(_) => ErrorKind::Validation,
            _ => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
