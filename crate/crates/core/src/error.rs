//! Error type shared by every module of the lab.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // geometry
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("weight exponent {exponent} makes the boundary integral divergent (integrand ~ d^{power})")]
    DivergentWeight { exponent: f64, power: f64 },

    // stationary
    #[error("Newton did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("Newton iterates collapsed to the trivial solution")]
    CollapseToZero,
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    // evolution
    #[error("invalid time argument: {0}")]
    InvalidTime(String),
    #[error("time step failed at t = {t:.6e} after {halvings} step halvings")]
    StepFailure { t: f64, halvings: usize },
    #[error("accepted state dipped to {min:.3e} at t = {t:.6e}")]
    NegativityViolation { t: f64, min: f64 },
    #[error("rescaled state lost positivity at tau = {tau:.6e}")]
    PositivityLoss { tau: f64 },
    #[error("incompatible trajectories: {0}")]
    IncompatibleTrajectories(String),
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    // spectrum
    #[error("inverse iteration stalled for eigenpair {index}")]
    IterationStall { index: usize },
    #[error("invalid eigenproblem request: {0}")]
    InvalidEigenRequest(String),

    // asymptotics
    #[error("mode {j} not converged: drift {drift:.3e} against c_j = {c:.3e}")]
    NotConverged { j: usize, drift: f64, c: f64 },
    #[error("degenerate least-squares fit: {0}")]
    DegenerateFit(String),

    // regularity
    #[error("fit window too small: {0} samples")]
    WindowTooSmall(usize),
    #[error("nonlinear fit diverged: {0}")]
    FitDiverged(String),
    #[error("boundary correction term is identically zero")]
    DegenerateCorrection,
    #[error("finite differences are dominated by roundoff")]
    NoiseDominated,

    // cli
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
