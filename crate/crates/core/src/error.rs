use thiserror::Error;

/// Errors raised by the numerical kernels, the Monte Carlo engine and the
/// goodness-of-fit utilities.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what}: series did not reach tolerance {tol:e} within {max_terms} terms")]
    TermCapExceeded {
        what: &'static str,
        max_terms: usize,
        tol: f64,
    },

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("degenerate weights: effective sample size {ess:.1} is below {min}")]
    DegenerateWeights { ess: f64, min: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("{fraction:.4} of the weight falls outside the bins")]
    Coverage { fraction: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
