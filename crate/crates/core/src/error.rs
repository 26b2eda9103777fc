use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A realization that stopped before reaching `t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationFailure {
    pub realization: usize,
    pub time: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid equation: {0}")]
    InvalidEquation(String),

    #[error("invalid integrator: {0}")]
    InvalidIntegrator(String),

    #[error("invalid run: {0}")]
    InvalidRun(String),

    #[error("field diverged at t = {time} (max |f| = {max_abs:e})")]
    Divergence { time: f64, max_abs: f64 },

    #[error("{} of {total} realizations diverged (first: #{} at t = {})",
        failures.len(), failures[0].realization, failures[0].time)]
    EnsembleDiverged {
        total: usize,
        failures: Vec<RealizationFailure>,
    },

    #[error("tilt identity needs an open window, got a periodic grid")]
    PeriodicTiltWindow,

    #[error("fit needs at least {needed} points in the window, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("non-positive value {value} at abscissa {x} inside the fit window")]
    NonPositiveValue { x: f64, value: f64 },

    #[error("no pre-saturation window detected")]
    NoGrowthWindow,

    #[error("series for L = {0} has not saturated")]
    Unsaturated(usize),

    #[error("collapse needs at least {needed} system sizes, got {found}")]
    TooFewSizes { needed: usize, found: usize },

    #[error("rescaled curves have no common support")]
    EmptyCommonSupport,

    #[error("Hilbert space dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid spin model: {0}")]
    InvalidSpinModel(String),

    #[error("master equation tolerance violated at t = {time}: {what} = {value:e}")]
    ToleranceViolation {
        time: f64,
        what: &'static str,
        value: f64,
    },

    #[error("steady state not converged after t = {time}: residual {residual:e}")]
    NotConverged { time: f64, residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}
