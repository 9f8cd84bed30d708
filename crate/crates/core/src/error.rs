use std::path::PathBuf;

use thiserror::Error;

use crate::multi::PowerSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Gains do not satisfy `h_cci (1 + chi) < min(h_up, h_down)`.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// Numerical routine failed on inputs it should handle. Treat as a bug.
    #[error("solver error: {0}")]
    Solver(String),

    /// The iteration cap was reached before the duality gap closed.
    #[error("no convergence after {iterations} iterations (relative gap {gap:.3e})")]
    Convergence {
        iterations: usize,
        gap: f64,
        best: Box<PowerSolution>,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error on {}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl Error {
    /// Prefix the message with the index of the grid point that failed.
    pub fn at_grid_index(self, index: usize) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("grid point {index}: {m}")),
            Error::PreconditionViolated(m) => {
                Error::PreconditionViolated(format!("grid point {index}: {m}"))
            }
            Error::Configuration(m) => Error::Configuration(format!("grid point {index}: {m}")),
            Error::Solver(m) => Error::Solver(format!("grid point {index}: {m}")),
            other => other,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
