use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain where the quantity is defined.
    #[error("{what} is undefined at {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error(
        "quadrature over [{lo}, {hi}] did not converge: estimate {estimate:e}, \
         error estimate {error_estimate:e} > tolerance {tolerance:e} after {intervals} intervals"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error_estimate: f64,
        tolerance: f64,
        intervals: usize,
    },

    #[error("assumption check failed: {0}")]
    Assumption(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("trajectory is missing steps: expected {expected}, found {found}")]
    MissingSteps { expected: u64, found: u64 },

    #[error("record steps differ between seed {first} and seed {other}")]
    InconsistentStrides { first: u64, other: u64 },
}
