use thiserror::Error;

/// Errors surfaced by construction and analysis routines.
///
/// Analysis verdicts (infeasible corridor, unstable design) are *results*,
/// not errors; only contract violations land here.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A parameter violates its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Plant rates coincide, so the distinct-eigenvalue machinery
    /// (closed-form exponential, partial fractions) has no valid form.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    /// An argument falls outside the interval an operation is defined on.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// The output nonlinearity has zero slope at the operating point, so
    /// modulation coefficients are undefined there.
    #[error("degenerate slope: {0}")]
    DegenerateSlope(String),

    /// Evaluation at a singular point of the formula (e.g. the Hill
    /// derivative at zero concentration with exponent below one).
    #[error("singularity: {0}")]
    Singularity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
