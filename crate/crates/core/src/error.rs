use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An amplitude the predistorter cannot invert under the `reject` policy.
    #[error("modulus {value} is beyond the invertible range [0, {limit}]")]
    OutOfRange { value: f64, limit: f64 },

    #[error("LUT adaptation diverged at iteration {iteration} (residual {residual:e})")]
    AdaptationFailed { iteration: usize, residual: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
