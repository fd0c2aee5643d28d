use thiserror::Error;

/// Crate-wide error type. Parameter errors carry the offending field so that
/// configuration problems can be reported precisely.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Parameter combinations sitting exactly on a boundary between scaling
    /// regimes, where the limit object is ambiguous.
    #[error("`{field}` lies on an excluded regime boundary: {reason}")]
    Boundary { field: &'static str, reason: String },

    #[error("{what} not supported: {reason}")]
    Unsupported { what: &'static str, reason: String },

    #[error("quadrature failed to reach tolerance in {context}: error estimate {achieved:.3e}, requested {requested:.3e}")]
    Quadrature {
        context: &'static str,
        achieved: f64,
        requested: f64,
    },
}

impl Error {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub fn boundary(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Boundary {
            field,
            reason: reason.into(),
        }
    }

    pub fn unsupported(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Unsupported {
            what,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
