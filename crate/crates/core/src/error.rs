use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("field is not normalized: mass = {mass}")]
    NotNormalized { mass: f64 },

    #[error("kernel under-resolved: width {width:.3e} < {min_width:.3e} (4 grid spacings); enable the delta override to substitute a discrete delta")]
    UnderResolved { width: f64, min_width: f64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameters outside the stability region: {0}")]
    Unstable(String),

    #[error("collapse detected at iteration {iteration}: kinetic energy {kinetic:.4e} exceeded ceiling {ceiling:.4e} with energy {energy:.4e}")]
    CollapseDetected {
        iteration: usize,
        kinetic: f64,
        ceiling: f64,
        energy: f64,
        energy_trace: Vec<f64>,
        kinetic_trace: Vec<f64>,
    },

    #[error("resource ceiling exceeded: {0}")]
    Ceiling(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
