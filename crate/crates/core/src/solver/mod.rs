//! Solving, certifying and differentiating the capture-point program.
//!
//! For a phase `i` (first uncaptured attacker) the program is
//!
//! ```text
//! min  sum_{j>=i} theta_j h(p_j)
//! s.t. |p_j - x_Aj| / nu_j - sum_{k=i..j} |p_k - p_{k-1}| <= 0,   p_{i-1} = x_D
//! ```
//!
//! a difference-of-convex program once two or more attackers remain. Local
//! solutions come from the convex-concave procedure ([`ccp_solve`]), refined to
//! machine precision by Newton's method on the KKT system; [`multistart_solve`]
//! approximates the global minimizer set.

pub(crate) mod ccp;
pub(crate) mod chain;
mod convex;
pub(crate) mod kkt;
mod multistart;
pub(crate) use multistart::sample_ball;
mod sensitivity;
mod single;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::model::{GameConfig, GameState};
use crate::Point;
use chain::ChainProgram;
use kkt::CertTolerances;

pub use multistart::{multistart_solve, multistart_solve_with};
pub use sensitivity::{isaacs_residual, value_gradient, ValueGradient};
pub use single::{apollonius_ball, solve_single, Ball};

/// Outcome of the LICQ / strict complementarity / second-order checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub licq: bool,
    pub scs: bool,
    pub sosc: bool,
    /// Smallest eigenvalue of the Lagrangian Hessian projected on the critical
    /// cone; `None` when the cone is trivial.
    pub sosc_min_eig: Option<f64>,
}

impl Certificates {
    pub fn all(&self) -> bool {
        self.licq && self.scs && self.sosc
    }
}

/// Capture points for the attackers still in play, with multipliers and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapturePlan {
    pub phase: usize,
    /// `points[k]` is the capture point of attacker `phase + k`.
    #[serde(with = "crate::serde_points")]
    pub points: Vec<Point>,
    /// `multipliers[k]` belongs to constraint `phase + k`.
    pub multipliers: Vec<f64>,
    pub value: f64,
    pub kkt_residual: f64,
    /// Absolute attacker indices of the active constraints.
    pub active_set: Vec<usize>,
    pub certificates: Certificates,
    /// Objective values along the convex-concave iterations.
    #[serde(skip_serializing, default)]
    pub objective_history: Vec<f64>,
}

impl CapturePlan {
    /// Capture point of attacker `j` (absolute index), if still in play.
    pub fn point(&self, j: usize) -> Option<&Point> {
        j.checked_sub(self.phase).and_then(|k| self.points.get(k))
    }

    /// All `m` points, using the attackers' own positions for captured ones.
    pub fn padded_points(&self, state: &GameState) -> Vec<Point> {
        let mut out: Vec<Point> = state.attackers[..self.phase].to_vec();
        out.extend(self.points.iter().cloned());
        out
    }

    pub fn max_norm_distance(&self, other: &CapturePlan) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    fn lex_cmp(&self, other: &CapturePlan) -> std::cmp::Ordering {
        let a = self.points.iter().flat_map(|p| p.iter());
        let b = other.points.iter().flat_map(|p| p.iter());
        for (x, y) in a.zip(b) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    }
}

/// Result of a multistart solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub best: CapturePlan,
    /// Distinct stationary plans, sorted by value then lexicographically.
    pub stationary_points: Vec<CapturePlan>,
    /// Another distinct plan is within `value_gap_tol` of the best one.
    pub ambiguous: bool,
    /// Every near-optimal plan keeps all capture points strictly outside the target.
    /// Only the discovered plans are inspected, so this under-approximates the check.
    pub in_capturable_set: bool,
    pub failed_starts: usize,
}

impl SolveReport {
    /// Value gradient of the best plan; refuses ambiguous reports.
    pub fn value_gradient(&self, state: &GameState, cfg: &GameConfig) -> Result<ValueGradient> {
        if self.ambiguous {
            return Err(GameError::AmbiguousPlan);
        }
        value_gradient(&self.best, state, cfg)
    }
}

/// Numerical settings of the local and multistart solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub n_starts: usize,
    pub dedup_radius: f64,
    pub scs_tol: f64,
    pub sosc_tol: f64,
    pub licq_tol: f64,
    /// Smoothing `delta` in `sqrt(|z|^2 + delta^2)` inside the convex subproblems.
    pub smoothing: f64,
    pub max_ccp_iters: usize,
    /// Stop when one iteration lowers the objective by less than this (relative).
    pub ccp_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            n_starts: 32,
            dedup_radius: 1e-4,
            scs_tol: 1e-8,
            sosc_tol: 1e-8,
            licq_tol: 1e-8,
            smoothing: 1e-9,
            max_ccp_iters: 200,
            ccp_tol: 1e-12,
        }
    }
}

impl SolverOptions {
    fn cert_tolerances(&self, cfg: &GameConfig) -> CertTolerances {
        CertTolerances {
            active_tol: cfg.tolerances.kkt_tol,
            licq_tol: self.licq_tol,
            scs_tol: self.scs_tol,
            sosc_tol: self.sosc_tol,
        }
    }
}

fn check_phase(state: &GameState, cfg: &GameConfig, phase: usize) -> Result<()> {
    let mut s = state.clone();
    s.phase = phase;
    s.check(cfg)
}

/// Assembles a plan (value, active set, certificates) from a program solution.
#[allow(clippy::too_many_arguments)]
fn make_plan(
    prog: &ChainProgram,
    cfg: &GameConfig,
    opts: &SolverOptions,
    phase: usize,
    x: &nalgebra::DVector<f64>,
    lambda: Vec<f64>,
    residual: f64,
    history: Vec<f64>,
) -> CapturePlan {
    let active_set = kkt::active_set(prog, x.as_slice(), cfg.tolerances.kkt_tol)
        .into_iter()
        .map(|j| j + phase)
        .collect();
    let certificates = kkt::certificates(prog, x.as_slice(), &lambda, &opts.cert_tolerances(cfg))
        .unwrap_or_default();
    CapturePlan {
        phase,
        points: prog.unstack(x),
        value: prog.objective(x.as_slice()),
        multipliers: lambda,
        kkt_residual: residual,
        active_set,
        certificates,
        objective_history: history,
    }
}

/// Local solve of the program for `phase` by the convex-concave procedure,
/// started from `initial_points` (one point per remaining attacker).
pub fn ccp_solve(
    state: &GameState,
    cfg: &GameConfig,
    phase: usize,
    initial_points: &[Point],
) -> Result<CapturePlan> {
    ccp_solve_with(state, cfg, phase, initial_points, &SolverOptions::default())
}

pub fn ccp_solve_with(
    state: &GameState,
    cfg: &GameConfig,
    phase: usize,
    initial_points: &[Point],
    opts: &SolverOptions,
) -> Result<CapturePlan> {
    check_phase(state, cfg, phase)?;
    let prog = ChainProgram::for_phase(state, cfg, phase);
    if initial_points.len() != prog.q() {
        return Err(GameError::DimensionMismatch {
            expected: prog.q(),
            found: initial_points.len(),
        });
    }
    if initial_points.iter().any(|p| p.len() != cfg.n) {
        return Err(GameError::DimensionMismatch {
            expected: cfg.n,
            found: initial_points.iter().map(|p| p.len()).find(|&l| l != cfg.n).unwrap_or(0),
        });
    }
    let start = ChainProgram::stack(initial_points);
    let run = ccp::run(&prog, &start, opts, cfg.tolerances.kkt_tol)?;
    let iterations = run.iterations;
    let plan = make_plan(
        &prog,
        cfg,
        opts,
        phase,
        &run.x,
        run.lambda,
        run.residual,
        run.history,
    );
    if iterations > opts.max_ccp_iters {
        return Err(GameError::MaxIterations {
            iterations: opts.max_ccp_iters,
            last: Box::new(plan),
        });
    }
    Ok(plan)
}

fn plan_program<'a>(plan: &CapturePlan, state: &GameState, cfg: &'a GameConfig) -> Result<ChainProgram<'a>> {
    check_phase(state, cfg, plan.phase)?;
    let prog = ChainProgram::for_phase(state, cfg, plan.phase);
    if plan.points.len() != prog.q() || plan.multipliers.len() != prog.q() {
        return Err(GameError::DimensionMismatch {
            expected: prog.q(),
            found: plan.points.len(),
        });
    }
    Ok(prog)
}

/// KKT residual of a plan: the worst of stationarity, primal feasibility,
/// dual feasibility and complementary slackness.
pub fn kkt_residual(plan: &CapturePlan, state: &GameState, cfg: &GameConfig) -> Result<f64> {
    let prog = plan_program(plan, state, cfg)?;
    let x = ChainProgram::stack(&plan.points);
    kkt::residual(&prog, x.as_slice(), &plan.multipliers)
}

/// LICQ, strict complementarity and second-order sufficiency at a plan.
pub fn certify(plan: &CapturePlan, state: &GameState, cfg: &GameConfig) -> Result<Certificates> {
    let prog = plan_program(plan, state, cfg)?;
    let x = ChainProgram::stack(&plan.points);
    kkt::certificates(
        &prog,
        x.as_slice(),
        &plan.multipliers,
        &SolverOptions::default().cert_tolerances(cfg),
    )
}

/// Re-solves the program at a (nearby) state, warm-started from `plan`:
/// Newton refinement on the plan's active set, falling back to the
/// convex-concave procedure from the plan's points.
pub fn resolve_local(plan: &CapturePlan, state: &GameState, cfg: &GameConfig) -> Result<CapturePlan> {
    let opts = SolverOptions::default();
    let prog = plan_program(plan, state, cfg)?;
    let x = ChainProgram::stack(&plan.points);
    let active: Vec<usize> = plan.active_set.iter().map(|j| j - plan.phase).collect();
    if let Ok(k) = kkt::polish(&prog, &x, &plan.multipliers, active) {
        if let Ok(res) = kkt::residual(&prog, k.x.as_slice(), &k.lambda) {
            if res <= cfg.tolerances.kkt_tol {
                return Ok(make_plan(&prog, cfg, &opts, plan.phase, &k.x, k.lambda, res, vec![]));
            }
        }
    }
    ccp_solve_with(state, cfg, plan.phase, &plan.points, &opts)
}
