use thiserror::Error;

/// Errors raised by kernel propagation, phase analysis and the predictor.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("covariance {q_ab} outside the valid range for diagonal {qstar}")]
    Domain { q_ab: f64, qstar: f64 },

    #[error("{what} did not converge after {iterations} iterations (last iterate {last})")]
    NonConvergence {
        what: &'static str,
        last: f64,
        iterations: usize,
    },

    #[error("root is not bracketed on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("diagonal drifted to {value} at depth {depth} (expected {qstar})")]
    DiagonalDrift { depth: usize, value: f64, qstar: f64 },

    #[error("filter window 2k+1 = {window} exceeds spatial size {spatial}")]
    WindowTooLarge { window: usize, spatial: usize },

    #[error("input row {row} is identically zero")]
    ZeroRow { row: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    Asymmetric { max_asymmetry: f64 },

    #[error("kernel matrix is singular (min eigenvalue {min_eigenvalue:e})")]
    Singular { min_eigenvalue: f64 },

    #[error("step size too large: layer-norm diagonal drifted by {drift:e} at t = {t}")]
    StepTooLarge { t: f64, drift: f64 },

    #[error("no asymptotic prediction for {0}")]
    UndefinedPrediction(String),

    #[error("series value {value} at index {index} is not positive")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("need at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
