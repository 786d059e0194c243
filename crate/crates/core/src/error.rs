use thiserror::Error;

/// Errors produced by the numerical kernels and drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// The field variance vanishes at the requested point (equator, or the
    /// pole at even degree), so conditioning on a zero is meaningless there.
    #[error("degenerate variance at theta = {theta}: {detail}")]
    DegenerateVariance { theta: f64, detail: String },

    /// Both variances of a Gaussian norm expectation are zero.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Quadrature failed to converge within the refinement cap.
    #[error("numerical failure in {op}: {diagnostic}")]
    NumericalFailure { op: &'static str, diagnostic: String },

    /// A regression was requested over too narrow a set of degrees.
    #[error("insufficient span: {0}")]
    InsufficientSpan(String),

    /// A sampling grid violates the resolution rule for the requested degree.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// Bad experiment configuration.
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
