use thiserror::Error;

/// Errors raised anywhere in the synthesis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Schur stable: spectral radius {rho:.12} (gate {limit:.12})")]
    Unstable { rho: f64, limit: f64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("system is not {l}-step observable (rank {rank} < order {order})")]
    NotObservable { l: usize, rank: usize, order: usize },

    #[error("controller is not liftable at history length {l}: observability rank {rank} < minimal order {order}")]
    NotLiftable { l: usize, rank: usize, order: usize },

    #[error("cost is unbounded: closed-loop history dynamics have spectral radius {rho:.12}")]
    UnboundedCost { rho: f64 },

    #[error("gradient step destabilized the loop: spectral radius {rho:.12} after {halvings} step-size halvings")]
    StepDestabilized { rho: f64, halvings: u32 },

    #[error("no stabilizing gain found after {0} draws")]
    NoStabilizer(usize),

    #[error("rollout {rollout} diverged at step {step} (state norm {norm:.3e})")]
    RolloutDiverged { rollout: usize, step: usize, norm: f64 },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
