use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum GlnoError {
    #[error("pole collision: |{what}| = {distance:.3e} is within the pole tolerance")]
    PoleCollision { what: String, distance: f64 },

    #[error("exponent overflow: |{exponent:.3e}| exceeds the limit {limit}")]
    Overflow { exponent: f64, limit: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("eigensolver did not converge after {iterations} iterations (worst relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver instability: {0}")]
    Unstable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GlnoError>;

/// Guard against `exp` overflow: every exponent the toolkit evaluates must
/// stay below this magnitude.
pub const EXP_LIMIT: f64 = 700.0;

/// Absolute complex-modulus tolerance used for all pole-collision checks.
pub const POLE_TOLERANCE: f64 = 1e-8;

pub(crate) fn check_exponent(exponent: f64) -> Result<()> {
    if !exponent.is_finite() || exponent.abs() > EXP_LIMIT {
        return Err(GlnoError::Overflow {
            exponent,
            limit: EXP_LIMIT,
        });
    }
    Ok(())
}
