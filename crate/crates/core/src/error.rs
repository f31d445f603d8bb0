use thiserror::Error;

use crate::solver::CapturePlan;

/// Errors raised by the game model, the solvers and the simulator.
#[derive(Debug, Error)]
pub enum GameError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid target shape: {0}")]
    InvalidShape(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("index {index} out of range (valid: {lo}..={hi})")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    /// A norm kernel vanished, so a gradient is undefined at this point.
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    /// The attacker already sits within capture distance of the defender.
    #[error("attacker {attacker} coincides with the defender")]
    CoincidentPositions { attacker: usize },

    #[error("no feasible starting point found")]
    InfeasibleStart,

    #[error("convex-concave procedure hit {iterations} iterations without converging")]
    MaxIterations {
        iterations: usize,
        last: Box<CapturePlan>,
    },

    #[error("every start failed; first failure: {0}")]
    AllStartsFailed(String),

    #[error("baseline stage {stage} has no feasible capture point")]
    StageInfeasible { stage: usize },

    #[error("plan is not certified (LICQ/SCS/SOSC failed)")]
    UncertifiedPlan,

    #[error("several global minimizers; the value gradient is not defined")]
    AmbiguousPlan,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, GameError>;
