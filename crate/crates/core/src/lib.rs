//! Single-defender / multi-attacker target-guarding game.
//!
//! The attackers jointly pick capture points `p_i` that minimize the weighted
//! proximity `sum theta_i h(p_i)` to a convex target, subject to every attacker
//! reaching its point no later than the defender, who visits the points in
//! order. This crate solves that (nonconvex) program, certifies its solutions,
//! turns them into feedback strategies and simulates the resulting game.
//!
//! Attacker and phase indices are zero-based throughout the API.

// `!(x > 0.0)` is deliberate: NaN must fail the positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod model;
pub mod sim;
pub mod solver;
pub mod strategies;

mod serde_points;

pub use error::{GameError, Result};
pub use geometry::ProximityShape;
pub use model::{
    constraint_g, constraint_gradients, objective_f, validate_config, ConstraintGradients,
    GameConfig, GameState, Tolerances,
};
pub use sim::{
    detect_capture, saddle_check, simulate, step, AttackerMode, CaptureEvent, DefenderMode,
    DefenderPolicy, Deviator, Outcome, SaddleReport, SaddleRun, SimOptions, Trajectory,
};
pub use solver::{
    apollonius_ball, ccp_solve, certify, isaacs_residual, kkt_residual, multistart_solve,
    multistart_solve_with, resolve_local, ccp_solve_with, solve_single, value_gradient, Ball, CapturePlan,
    Certificates, SolveReport, SolverOptions, ValueGradient,
};
pub use strategies::{
    cooperative_controls, noncooperative_plan, replan, replan_with, BaselinePlan, ControlProfile,
};

/// A point (or vector) in `R^n`.
pub type Point = nalgebra::DVector<f64>;

/// Convenience constructor for a point from its coordinates.
pub fn point(coords: &[f64]) -> Point {
    Point::from_column_slice(coords)
}
