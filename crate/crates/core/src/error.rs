use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("config file: {0}")]
    Config(String),
    #[error("degenerate geometry")]
    DegenerateGeometry,
    #[error("path-loss distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("{what} index {index} out of range (count {count})")]
    Index {
        what: &'static str,
        index: usize,
        count: usize,
    },
    #[error("active step infeasible")]
    ActiveInfeasible,
    #[error("randomization failed")]
    RandomizationFailed,
    #[error("passive recovery failed")]
    PassiveRecoveryFailed,
    #[error("power allocation infeasible")]
    PowerLpInfeasible,
    #[error("solver did not converge: {0}")]
    Numerical(String),
    #[error(transparent)]
    Conic(#[from] swipt_conic::ConicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
