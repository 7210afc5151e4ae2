use thiserror::Error;

use crate::equilibria::Equilibrium;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("no bracket for the {k}-th bifurcation value inside [{lo}, {hi}]")]
    WindowExhausted { k: usize, lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integration failed at t = {t}: {message}")]
    IntegrationFailure { t: f64, message: String },

    /// Newton did not reach the residual tolerance; `best` is the iterate
    /// with the smallest residual.
    #[error("Newton did not converge after {iterations} iterations (best residual {})", best.residual)]
    NonConvergence {
        iterations: usize,
        best: Box<Equilibrium>,
    },

    #[error("equilibrium is not hyperbolic (margin {margin:e})")]
    NonHyperbolic { margin: f64 },

    #[error("index disagreement inside gap ({lo}, {hi}) at λ = {lambda}")]
    ContinuationViolation { lo: f64, hi: f64, lambda: f64 },

    #[error(
        "isolation failure at λ = {lambda}: equilibrium of norm {norm} near the ball boundary"
    )]
    IsolationFailure { lambda: f64, norm: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("undecidable: {0}")]
    Undecidable(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
