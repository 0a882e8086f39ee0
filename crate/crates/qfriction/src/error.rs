use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("static pole: Drude permittivity diverges at zero frequency")]
    StaticPole,
    #[error("reflection coefficient pole: permittivity equals -1 at the requested frequency")]
    ReflectionPole,
    #[error("surface contact: trajectory height is non-positive ({z} m)")]
    SurfaceContact { z: f64 },
    #[error("quadrature failed to converge: error estimate {error_estimate} after {subdivisions} subdivisions")]
    NonConvergence {
        error_estimate: f64,
        subdivisions: usize,
    },
    #[error("power-law fit failed: {0}")]
    FitError(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
