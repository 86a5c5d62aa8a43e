use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("covariance matrix is not positive definite even after maximum jitter")]
    SingularCovariance,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("no event-to-sample lag falls inside the HRF support")]
    EmptySupport,

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("activation weights produce no nonzero HRF coefficient")]
    DegenerateBeta,

    #[error("reference signal has zero variance")]
    DegenerateTruth,

    #[error("input is constant or too short: {0}")]
    DegenerateInput(&'static str),

    #[error("design matrix is identically zero")]
    DegenerateDesign,

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable identifier, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::SingularCovariance => "SingularCovariance",
            Error::NonFinite(_) => "NonFinite",
            Error::EmptySupport => "EmptySupport",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DegenerateBeta => "DegenerateBeta",
            Error::DegenerateTruth => "DegenerateTruth",
            Error::DegenerateInput(_) => "DegenerateInput",
            Error::DegenerateDesign => "DegenerateDesign",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
