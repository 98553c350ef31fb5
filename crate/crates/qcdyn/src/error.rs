use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("operation requires {expected:?} role, got {got:?}")]
    RoleError { expected: crate::state::Role, got: crate::state::Role },

    #[error("smearing width too narrow: {0}")]
    Resolution(String),

    #[error("potential range insufficient: {0}")]
    Range(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("time step violates stability guard: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("normalization drift {drift:.3e} exceeded budget {budget:.3e} at t = {t:.6}")]
    NormDrift { drift: f64, budget: f64, t: f64 },

    #[error("dense oracle dimension {dim} exceeds cap {cap}")]
    SizeCap { dim: usize, cap: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid value for `{key}`: {msg}")]
    Validation { key: String, msg: String },

    #[error("time axes are not aligned: {0}")]
    Alignment(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error("trajectory horizon exceeded: requested t = {requested}, recorded up to {horizon}")]
    Horizon { requested: f64, horizon: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
