use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by the numerical engine.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the domain of a function (poles, non-positive inputs).
    #[error("{func}: domain error: {msg}")]
    Domain { func: &'static str, msg: String },

    /// Invalid model or numerics configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Iterative refinement did not settle.
    #[error("{what} did not converge: last estimate {last:e}, previous {previous:e}")]
    Convergence {
        what: &'static str,
        last: f64,
        previous: f64,
    },

    /// The alpha-mu moment-matching solver failed after every restart.
    #[error("alpha-mu fit failed (best alpha {alpha}, mu {mu}, residual {residual:e})")]
    Fit { alpha: f64, mu: f64, residual: f64 },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed: {msg} (partial value {partial:e}, error {error:e})")]
    Quadrature {
        msg: String,
        partial: f64,
        error: f64,
    },

    /// An intermediate quantity left the representable range.
    #[error("overflow in {0}")]
    Overflow(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            func,
            msg: msg.into(),
        }
    }
}
