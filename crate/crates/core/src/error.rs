use thiserror::Error;

/// Errors raised by the analytic and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("{name} {requirement} (got {value})")]
    Domain {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    /// The sample cannot support the estimator (empty arm, zero first stage).
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    /// An observed (Z, D) table implies impossible stratum counts.
    #[error("infeasible table: {0}")]
    InfeasibleTable(String),

    /// Root bracketing for the effect-size inversion failed.
    #[error("cannot bracket tau for kappa target {target}: {reason}")]
    Bracket { target: f64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, requirement: &'static str, value: f64) -> Error {
    Error::Domain {
        name,
        requirement,
        value,
    }
}
