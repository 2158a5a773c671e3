use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "tail tolerance {tol:e} not reached at box half-width cap {cap}; achieved relative tail bound {achieved:e}"
    )]
    TailTolerance { tol: f64, cap: f64, achieved: f64 },

    #[error("quadrature needs {needed} points, budget is {budget}")]
    QuadratureBudget { needed: u128, budget: u128 },

    #[error("sampling rule violated: band limit {band} needs N >= {required_n} (got {n})")]
    Nyquist { band: f64, required_n: usize, n: usize },

    #[error("numerical consistency: imaginary residue {residue:e} exceeds {threshold:e}")]
    ImaginaryResidue { residue: f64, threshold: f64 },

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
