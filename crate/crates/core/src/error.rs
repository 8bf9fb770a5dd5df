use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {x} outside the domain of {what}")]
    Domain { what: &'static str, x: f64 },

    #[error("{what} overflows for x = {x}")]
    Overflow { what: &'static str, x: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("delta-shell potentials are analytic-only and cannot be sampled pointwise")]
    AnalyticOnly,

    #[error("grid too coarse: integral-equation residual {residual:e} exceeds {tolerance:e}")]
    GridTooCoarse { residual: f64, tolerance: f64 },

    #[error("inconsistent grid: {0}")]
    InconsistentGrid(String),

    #[error("family is not monotone in the repulsive strength near {at}")]
    NonMonotone { at: f64 },

    #[error("root finding failed: {0}")]
    RootNotFound(String),

    #[error("zero repulsive volume; weak-coupling ratio undefined")]
    ZeroRepulsiveVolume,

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("ill-conditioned overlap matrix: {0}")]
    IllConditioned(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
