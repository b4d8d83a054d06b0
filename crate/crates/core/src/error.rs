use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or solver parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Scenario or CLI configuration is inconsistent.
    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    /// A cross-reference in the scenario does not resolve.
    #[error("dangling reference: `{from}` refers to unknown `{to}`")]
    DanglingReference { from: String, to: String },

    #[error("power flow did not converge after {sweeps} sweeps (last mismatch {mismatch:.3e} p.u.)")]
    NonConvergence { sweeps: usize, mismatch: f64 },

    #[error("voltage collapse at bus `{bus}`: |V| = {magnitude_pu:.4} p.u.")]
    VoltageCollapse { bus: String, magnitude_pu: f64 },

    /// The dispatch loop could not apply an accepted vector.
    #[error("dispatch aborted at step {step}: {reason}")]
    DispatchAborted { step: usize, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { path: path.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by user-supplied configuration rather than by
    /// the numerics at runtime.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Parameter { .. }
                | Error::Config { .. }
                | Error::DanglingReference { .. }
                | Error::Serialization(_)
        )
    }
}
