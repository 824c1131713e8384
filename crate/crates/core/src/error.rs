use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition of the called operation does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("numeric failure at iteration {iteration}: {message}")]
    NumericFailure { iteration: usize, message: String },

    #[error("zero marginal density at case {case}")]
    ZeroDensity { case: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("fitting failed: {0}")]
    Fitting(String),

    #[error("no rejection region: curve stays above q = {q} on [0, 10]")]
    NoRejectionRegion { q: f64 },

    #[error("degenerate candidate range: {0}")]
    DegenerateRange(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Stable machine-readable category, used for `ERROR <category>:` lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::NumericDomain(_) => "numeric-domain",
            Error::NumericFailure { .. } | Error::ZeroDensity { .. } => "numeric-failure",
            Error::Unsupported(_) => "unsupported",
            Error::Fitting(_) => "fitting",
            Error::NoRejectionRegion { .. } => "no-rejection-region",
            Error::DegenerateRange(_) => "degenerate-range",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "parse",
        }
    }
}
