//! Error type shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The damping coefficient violates the dominance condition
    /// `2 sqrt(m) Im(a) >= (1 - m) |Re(a)|` (or has `Im(a) <= 0`).
    #[error("inadmissible damping coefficient: {0}")]
    Inadmissible(String),

    /// Field shapes or domains do not match.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The implicit midpoint iteration failed to reach its residual target.
    #[error("midpoint iteration did not converge at t = {t} (residual {residual:.3e} after {iters} iterations); halve dt and retry")]
    StepFailure { t: f64, residual: f64, iters: usize },

    /// A non-finite value appeared in the state.
    #[error("numerical blow-up: non-finite field values at t = {t} (step {step})")]
    Blowup { t: f64, step: usize },

    /// The critical-source designer cannot satisfy its smallness precondition
    /// with the supplied initial data.
    #[error("critical-source precondition violated: {detail}; rescale the initial state by a factor <= {rescale:.6e}")]
    DesignInfeasible { detail: String, rescale: f64 },

    /// Configuration file problems, anchored to a line when known.
    #[error("config error{}: {msg}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { msg: String, line: Option<usize> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
