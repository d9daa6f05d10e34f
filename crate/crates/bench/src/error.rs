use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid method spec: {0}")]
    InvalidMethod(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("unknown objective: {0}")]
    UnknownObjective(String),
    #[error("unknown suite: {0}")]
    UnknownSuite(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("plan JSON malformed: {0}")]
    Json(String),
    #[error(transparent)]
    Solver(#[from] tsd_core::solvers::SolverError),
    #[error(transparent)]
    QuadProb(#[from] tsd_core::quadprob::QuadProbError),
}
