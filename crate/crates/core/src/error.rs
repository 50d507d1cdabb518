use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate lattice: basis matrix is singular or not square")]
    DegenerateLattice,

    #[error("lattice must have covolume 1 (got {covolume}); use normalize_lattice")]
    NotNormalized { covolume: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration cap exceeded: {requested} vectors requested, cap is {cap}")]
    EnumerationCapExceeded { requested: usize, cap: usize },

    /// The certified tail bound could not be pushed below the requested
    /// tolerance before hitting the enumeration cap. `value` and
    /// `error_bound` are the partial result at the largest admissible radius.
    #[error(
        "tolerance unreachable at cap: tail bound {error_bound:e} at radius {radius} (tol {tol:e})"
    )]
    ToleranceUnreachable {
        value: f64,
        error_bound: f64,
        radius: f64,
        tol: f64,
    },

    #[error("ball not embedded: 2R = {diameter} must be below the shortest lattice vector {shortest}")]
    BallNotEmbedded { diameter: f64, shortest: f64 },

    #[error("radius {radius} outside (0, {half_diameter}) (half diameter of the fundamental domain)")]
    RadiusOutOfRange { radius: f64, half_diameter: f64 },

    #[error("sampler stalled after {attempts} proposals at point {step}")]
    SamplerStalled { step: usize, attempts: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported Bessel order {0} (need 2*nu in 1..=16)")]
    UnsupportedOrder(f64),

    #[error("non-positive variance in row {index}")]
    NonPositiveVariance { index: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by numeric budgets rather than bad input.
    pub fn is_numeric_cap(&self) -> bool {
        matches!(
            self,
            Error::EnumerationCapExceeded { .. }
                | Error::ToleranceUnreachable { .. }
                | Error::SamplerStalled { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
