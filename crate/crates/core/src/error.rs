use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix not positive definite: leading minor {minor} has pivot {pivot:.3e}")]
    NotPositiveDefinite { minor: usize, pivot: f64 },

    #[error("singular covariance (smallest eigenvalue {smallest_eigenvalue:.3e})")]
    SingularCovariance { smallest_eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation region too improbable")]
    TruncationTooImprobable,

    #[error("degenerate variable: unique quantiles undeterminable")]
    DegenerateVariable,

    #[error("flip-flop factor singular at iteration {iteration}")]
    FlipFlopSingular { iteration: usize },

    #[error("infeasible QP constraints: {0}")]
    Infeasible(String),

    #[error("zero variance in coordinate {0}")]
    ZeroVariance(usize),

    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("all bootstrap replicates failed: {0}")]
    BootstrapFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
