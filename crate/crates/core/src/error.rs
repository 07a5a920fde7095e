use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("packet touches grid boundary: {0}")]
    PacketTouchesBoundary(String),

    #[error("numerical instability at step {step}: norm drift {drift:e} exceeds {tolerance:e}")]
    NumericalInstability { step: usize, drift: f64, tolerance: f64 },

    #[error("boundary density {density:e} exceeds {limit:e} at step {step}")]
    BoundaryDensity { step: usize, density: f64, limit: f64 },

    #[error("velocity undefined at x = {x} (density {density:e} <= floor {floor:e})")]
    VelocityUndefined { x: f64, density: f64, floor: f64 },

    #[error("position x = {x} outside grid [{x_min}, {x_max}]")]
    OutsideGrid { x: f64, x_min: f64, x_max: f64 },

    #[error("trajectory aborted at t = {t}: {reason}")]
    TrajectoryAborted { t: f64, reason: String },

    #[error("below threshold: parent mass {parent} < daughter masses {daughters}")]
    BelowThreshold { parent: f64, daughters: f64 },

    #[error("degenerate track geometry: opening angle {angle:e} rad below tolerance {tolerance:e}")]
    DegenerateGeometry { angle: f64, tolerance: f64 },

    #[error("basis inversion impossible: {0}")]
    BasisInversion(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed event file line {line}: {message}")]
    EventFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
