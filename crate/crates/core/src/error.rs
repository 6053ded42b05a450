use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A physical input lies outside the domain of the formula.
    #[error("domain error in `{field}`: {message}")]
    Domain { field: String, message: String },

    /// Inputs are individually valid but do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// An adaptive quadrature hit its refinement limit.
    #[error("quadrature did not converge: best estimate {estimate:e} ± {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    /// A covariance matrix violates positivity or the uncertainty relation.
    #[error("non-physical covariance matrix: {0}")]
    NonPhysical(String),

    /// The requested time series would not fit in memory.
    #[error("{samples} samples requested (limit {limit}); reduce tau or increase dt")]
    TooManySamples { samples: u64, limit: u64 },
}

impl Error {
    pub(crate) fn domain(field: &str, message: impl Into<String>) -> Self {
        Error::Domain {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Returns a domain error unless `value` is finite and strictly positive.
pub(crate) fn require_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(
            field,
            format!("must be positive, got {value}"),
        ))
    }
}

pub(crate) fn require_non_negative(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(
            field,
            format!("must be non-negative, got {value}"),
        ))
    }
}
