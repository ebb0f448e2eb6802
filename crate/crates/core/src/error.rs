use thiserror::Error;

/// Everything that can go wrong between reading a scenario and certifying an observer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("unordered bounds: {0}")]
    UnorderedBounds(String),
    #[error("spectra overlap: eigenvalue {0} of P matches an eigenvalue of -Q")]
    SpectraOverlap(String),
    #[error("near-singular matrix (reciprocal condition {rcond:.3e} < {rcond_min:.3e})")]
    NearSingular { rcond: f64, rcond_min: f64 },
    #[error("eigenvalue computation did not converge")]
    EigenFailure,
    #[error("observability matrix has rank zero")]
    ZeroObservableRank,
    #[error("plant is not detectable: non-observable block has eigenvalue {0}")]
    NotDetectable(String),
    #[error("Sylvester solution T is near-singular after {attempts} attempt(s) (reciprocal condition {rcond:.3e})")]
    NearSingularT { attempts: usize, rcond: f64 },
    #[error("non-observable block is (near-)defective: eigenvector condition {cond:.3e} exceeds {cond_max:.3e}")]
    NearDefective { cond: f64, cond_max: f64 },
    #[error("matrix is not stable in the requested time domain")]
    NotStable,
    #[error("invalid observer gains: {0}")]
    InvalidGains(String),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("scenario validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("state diverged (non-finite value) at t = {0}")]
    Divergence(f64),
    #[error("true {signal} leaves its envelope at t = {t}")]
    EnvelopeViolation { signal: String, t: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
