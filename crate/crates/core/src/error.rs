use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested problem size exceeds a memory or work budget.
    #[error("capacity exceeded: {what}; {advice}")]
    Capacity { what: String, advice: String },

    /// A quadrature could not reach its target accuracy within budget.
    #[error("accuracy target {target:e} not reached (achieved {achieved:e})")]
    Accuracy { target: f64, achieved: f64 },

    /// An exact identity that must hold up to rounding was violated.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    /// High-precision recomputation disagrees with the search arithmetic.
    #[error("numeric integrity failure: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn capacity(what: impl Into<String>, advice: impl Into<String>) -> Self {
        Error::Capacity {
            what: what.into(),
            advice: advice.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) => 2,
            Error::Capacity { .. } => 3,
            Error::Accuracy { .. } => 4,
            Error::Consistency(_) | Error::Integrity(_) => 5,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
