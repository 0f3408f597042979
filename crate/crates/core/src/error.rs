use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state is off the characteristic set: |p| = {residual:e} exceeds {tolerance:e}")]
    CharacteristicViolation { residual: f64, tolerance: f64 },

    #[error("point (z, t = {t}) lies inside the perturbation support")]
    InsidePerturbation { t: f64 },

    #[error("boundary chart is undefined at Z = 0")]
    ZeroBasePoint,

    #[error("boundary chart invalid: {0}")]
    ChartInvalid(String),

    #[error("inverse metric is not positive definite at z = {z:?}, t = {t}")]
    NotPositiveDefinite { z: Vec<f64>, t: f64 },

    #[error("bicharacteristic stayed {elapsed} time units inside the support box (budget {budget})")]
    TrappingSuspected { elapsed: f64, budget: f64 },

    #[error("integrator step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("no seed time outside the support box exists for this beam")]
    BeamSeedInsideSupport,

    #[error("t = {t} lies inside the perturbation window [{lo}, {hi}]")]
    InsideWindow { t: f64, lo: f64, hi: f64 },

    #[error("boundary leak: outer-shell mass fraction {fraction:e} exceeds {threshold:e} at t = {t}")]
    BoundaryLeak { fraction: f64, threshold: f64, t: f64 },

    #[error("implicit solve failed: {0}")]
    ConvergenceFailure(String),

    #[error("coherent packet clipped by the dual grid: {outside:e} of its mass lies outside")]
    PacketClipped { outside: f64 },

    #[error("spectral data has zero mass")]
    ZeroMass,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("scenario validation failed: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
