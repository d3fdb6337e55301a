use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate circuit: {0}")]
    DegenerateCircuit(String),
    #[error("singular feed-forward gain: {0}")]
    SingularGain(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("truncation error: trace deficit {deficit:.3e} at dim {dim}, try dim >= {suggested_dim}")]
    Truncation {
        dim: usize,
        deficit: f64,
        suggested_dim: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
