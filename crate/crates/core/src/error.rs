use thiserror::Error;

/// Errors raised by the numerical kernels, the channel model and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// The result is not representable in `f64`.
    #[error("range error in {func}: {detail}")]
    Range { func: &'static str, detail: String },

    /// A series or quadrature did not reach the requested tolerance.
    ///
    /// `partial` carries the best value obtained before giving up.
    #[error("{what} did not converge after {steps} steps (partial value {partial:e})")]
    Accuracy {
        what: &'static str,
        steps: usize,
        partial: f64,
    },

    /// Invalid model or simulator configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A request that would exceed memory or size limits.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Malformed or truncated binary trace data.
    #[error("bad trace data: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}

pub(crate) fn range(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Range {
        func,
        detail: detail.into(),
    }
}

pub(crate) fn check_finite(func: &'static str, name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(domain(func, format!("{name} must be finite, got {x}")))
    }
}
