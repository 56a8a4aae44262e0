//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CkmmError>;

#[derive(Debug, Error)]
pub enum CkmmError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate cluster {cluster}: total responsibility weight is zero")]
    DegenerateCluster { cluster: usize },

    #[error("correlation block at frequency {frequency} is singular after ridge regularization")]
    SingularCorrelation { frequency: usize },

    #[error("inconsistent frequency blocks: {0}")]
    InconsistentBlocks(String),

    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("unbalanced data not supported: {0}")]
    UnbalancedData(String),

    #[error("fit failed: {0}")]
    FitFailed(String),
}
