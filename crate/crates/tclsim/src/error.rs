//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong while configuring or running a simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration problems: unknown keys, out-of-range parameters,
    /// malformed config files. CLI exit code 2.
    #[error("config error: {0}")]
    Config(String),

    /// Numerical quadrature failed to converge within its budget.
    #[error("quadrature did not converge: {context} (requested tol {tol:.2e}, reached {reached:.2e})")]
    QuadratureNonConvergence {
        context: String,
        tol: f64,
        reached: f64,
    },

    /// The ODE stepper could not continue (step-size underflow).
    #[error("step-size underflow at t = {t_fs} fs (local error estimate {local_error:.3e})")]
    StepSizeUnderflow { t_fs: f64, local_error: f64 },

    /// A physical invariant drifted beyond 10× its tolerance mid-run.
    #[error("invariant breach at t = {t_fs} fs: {what} = {value:.3e} (limit {limit:.3e})")]
    InvariantBreach {
        t_fs: f64,
        what: &'static str,
        value: f64,
        limit: f64,
    },

    /// Trajectory post-processing was handed inconsistent inputs.
    #[error("mismatched trajectories: {0}")]
    Mismatch(String),

    /// I/O failures carry the path they concern.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI contract: config errors exit 2,
    /// numerical failures exit 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}
