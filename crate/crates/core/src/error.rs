use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to decode image{}: {message}", path.as_deref().map(|p| format!(" `{p}`")).unwrap_or_default())]
    Decode { path: Option<String>, message: String },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested pyramid level does not fit inside the image.
    #[error("scale factor {factor} is too deep for a {width}x{height} image")]
    ScaleTooDeep { factor: usize, width: usize, height: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(
        "channel chaining broken between layer {producer} and layer {consumer}: \
         expected {expected} input channels, found {found}"
    )]
    Chaining {
        producer: usize,
        consumer: usize,
        expected: usize,
        found: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate degradation model: {0}")]
    DegenerateModel(String),

    #[error("infeasible constraint: target of {target} weights is below the minimum of {minimum}")]
    Infeasible { target: f64, minimum: f64 },

    #[error("plan rejected: {0}")]
    PlanRejected(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
