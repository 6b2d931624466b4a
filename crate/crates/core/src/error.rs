use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model or call parameter violates its invariant.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An experiment configuration cannot be run as given.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The data do not support the requested estimate.
    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Parameters lie outside the region where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no root of h(alpha) = 1 below alpha_max = {alpha_max}")]
    NoRoot { alpha_max: f64 },

    /// Two quadrature rules of different size disagree beyond tolerance.
    #[error("quadrature disagreement {relative_gap:e} exceeds {tolerance:e} at {nodes} nodes")]
    Precision {
        nodes: usize,
        relative_gap: f64,
        tolerance: f64,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate limit: b = 0, normalized eigenvalues converge to zero")]
    DegenerateLimit,

    /// Pilot run projects fewer exceedances than required at some grid point.
    #[error(
        "insufficient exceedances: pilot counts {pilot_counts:?} over {pilot_reps} rows project below {required} at full size"
    )]
    InsufficientExceedances {
        pilot_counts: Vec<u64>,
        pilot_reps: usize,
        required: u64,
    },
}
