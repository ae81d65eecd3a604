use std::fmt;

use thiserror::Error;

use crate::domain::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A round that does not satisfy the structural assumption an algorithm needs.
    #[error("round {round}: precondition failed: {reason}")]
    Precondition { round: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    /// The requested computation is too large for the exact method.
    #[error("capability error: {0}")]
    Capability(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid environment: {}", DiagnosticList(.0))]
    InvalidEnvironment(Vec<Diagnostic>),

    #[error(transparent)]
    Invariant(#[from] InvariantViolation),

    /// A state the algorithms guarantee cannot occur.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

/// A per-round property that failed during a checked replay.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invariant `{invariant}` violated at round {round}: {witness}")]
pub struct InvariantViolation {
    pub invariant: &'static str,
    pub round: usize,
    pub witness: String,
}

struct DiagnosticList<'a>(&'a [Diagnostic]);

impl fmt::Display for DiagnosticList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}
