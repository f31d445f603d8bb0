//! One remaining attacker: the feasible set is the Apollonius ball and the
//! program is convex.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::chain::ChainProgram;
use super::convex::{al_solve, AlOptions, ConvexProblem};
use super::{kkt, make_plan, CapturePlan, SolverOptions};
use crate::error::{GameError, Result};
use crate::geometry::ProximityShape;
use crate::model::{GameConfig, GameState};
use crate::Point;

/// Closed ball `{p : |p - center| <= radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    #[serde(with = "crate::serde_points::single")]
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        (p - &self.center).norm() <= self.radius + tol
    }
}

/// Points attacker `i` reaches strictly no later than the defender:
/// `|p - x_A| / nu <= |p - x_D|`.
pub fn apollonius_ball(i: usize, state: &GameState, cfg: &GameConfig) -> Result<Ball> {
    let m = cfg.m();
    if i >= m {
        return Err(GameError::IndexOutOfRange {
            index: i,
            lo: 0,
            hi: m.saturating_sub(1),
        });
    }
    let a = state.attackers.get(i).ok_or(GameError::DimensionMismatch {
        expected: m,
        found: state.attackers.len(),
    })?;
    let d = &state.defender;
    if a.len() != cfg.n || d.len() != cfg.n {
        return Err(GameError::DimensionMismatch {
            expected: cfg.n,
            found: if a.len() != cfg.n { a.len() } else { d.len() },
        });
    }
    let sep = (a - d).norm();
    if sep < cfg.capture_radius {
        return Err(GameError::CoincidentPositions { attacker: i });
    }
    let nu = cfg.speeds[i];
    let k = 1.0 - nu * nu;
    Ok(Ball {
        center: (a - d * (nu * nu)) / k,
        radius: nu * sep / k,
    })
}

/// `min w h(p)` over a ball, in the smooth form `|p - c|^2 - R^2 <= 0`.
struct OverBall<'a> {
    target: &'a ProximityShape,
    weight: f64,
    ball: &'a Ball,
}

impl ConvexProblem for OverBall<'_> {
    fn dim(&self) -> usize {
        self.ball.center.len()
    }

    fn n_constraints(&self) -> usize {
        1
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        self.weight * self.target.value_unchecked(x.as_slice())
    }

    fn objective_derivs(&self, x: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        self.target.gradient_into(x.as_slice(), grad.as_mut_slice());
        *grad *= self.weight;
        hess.copy_from(&(self.target.hessian_unchecked() * self.weight));
    }

    fn constraint(&self, _j: usize, x: &DVector<f64>) -> f64 {
        (x - &self.ball.center).norm_squared() - self.ball.radius * self.ball.radius
    }

    fn constraint_derivs(
        &self,
        _j: usize,
        x: &DVector<f64>,
        grad: &mut DVector<f64>,
        hess: &mut DMatrix<f64>,
    ) {
        grad.copy_from(&((x - &self.ball.center) * 2.0));
        hess.fill_with_identity();
        *hess *= 2.0;
    }
}

/// Optimal capture point of the last attacker (the state must be in its final phase).
pub fn solve_single(state: &GameState, cfg: &GameConfig) -> Result<CapturePlan> {
    state.check(cfg)?;
    let phase = cfg.m() - 1;
    if state.phase != phase {
        return Err(GameError::IndexOutOfRange {
            index: state.phase,
            lo: phase,
            hi: phase,
        });
    }
    let ball = apollonius_ball(phase, state, cfg)?;
    let prob = OverBall {
        target: &cfg.target,
        weight: cfg.weights[phase],
        ball: &ball,
    };
    let out = al_solve(&prob, ball.center.clone(), None, &AlOptions::default());

    // Recover the multiplier of the original (non-squared) constraint.
    let prog = ChainProgram::for_phase(state, cfg, phase);
    let x = out.x;
    let on_boundary =
        ((&x - &ball.center).norm() - ball.radius).abs() <= 1e-7 * (1.0 + ball.radius);
    let active = if on_boundary || out.mu[0] > 0.0 { vec![0] } else { vec![] };
    let lambda0 = kkt::estimate_multipliers(&prog, x.as_slice(), &active)?;
    let k = kkt::polish(&prog, &x, &lambda0, active)?;
    let res = kkt::residual(&prog, k.x.as_slice(), &k.lambda)?;
    Ok(make_plan(
        &prog,
        cfg,
        &SolverOptions::default(),
        phase,
        &k.x,
        k.lambda,
        res,
        vec![],
    ))
}
