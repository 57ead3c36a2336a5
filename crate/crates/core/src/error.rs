use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hurst index {0} outside (0, 1)")]
    HurstOutOfRange(f64),

    #[error("covariance synthesis failed: {0}")]
    Synthesis(String),

    #[error("smoothing scale {alpha} below resolution floor {floor}")]
    UnderResolved { alpha: f64, floor: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative gram determinant {0:e}; inputs are corrupted")]
    CorruptedJacobian(f64),

    #[error("alpha {0} is not a node of the sheet grid")]
    NotAGridNode(f64),

    #[error("stride {stride} does not divide {n} steps")]
    BadStride { stride: usize, n: usize },

    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },

    #[error("form {name} failed registration check: {reason}")]
    Registration { name: String, reason: String },

    #[error("fourier reconstruction is inconsistent: imaginary part {imag:e} vs value {value:e}")]
    Reconstruction { value: f64, imag: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
