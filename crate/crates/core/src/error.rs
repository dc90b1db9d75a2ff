use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{0}")]
    Domain(String),

    /// The requested evaluation is outside the supported range of an algorithm.
    #[error("out of supported range: {0}")]
    Range(String),

    /// The leading coefficient of the method's denominator vanishes.
    #[error("singular method: beta_0 = 0")]
    SingularMethod,

    /// Newton iteration failed at a time step.
    #[error("Newton iteration did not converge at step {step} (residual {residual:e} after {iterations} iterations)")]
    Convergence {
        step: usize,
        residual: f64,
        iterations: usize,
    },

    /// Root certification of a method failed.
    #[error("stability violation: {0}")]
    Stability(String),

    /// A linear system could not be solved.
    #[error("singular linear system at step {0}")]
    SingularSystem(usize),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Whether this is an argument error (as opposed to a numerical failure).
    pub fn is_argument_error(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Range(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
