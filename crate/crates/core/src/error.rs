use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid scenario or parameter value. `key` names the offending setting.
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    /// Argument outside the domain of a pure function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A local interpolation matrix is singular to working precision.
    #[error("ill-conditioned stencil at node {center}: condition estimate {condition:.3e}")]
    IllConditioned { center: usize, condition: f64 },

    /// Solver state produced a non-physical or non-finite value.
    #[error("invalid state at node {node}: {message}")]
    State { node: usize, message: String },

    /// The sparse solve failed or missed its residual contract.
    #[error("linear solve failed: {message} (residual {residual:.3e})")]
    Solver { message: String, residual: f64 },

    /// Picard iterations exhausted without meeting the tolerance.
    #[error("Picard iteration did not converge at t = {time} after {} iterations (last delta {:.3e})", deltas.len(), deltas.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { time: f64, deltas: Vec<f64> },

    /// The finite-difference reference solver failed.
    #[error("reference solver failed at t = {time}: {message}")]
    Oracle { time: f64, message: String },

    /// Operation is not available for this node layout.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Vector lengths or argument shapes do not match.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
