//! Feedback strategies built from capture plans, and the noncooperative baseline.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::model::{GameConfig, GameState, KERNEL_EPS};
use crate::solver::chain::ChainProgram;
use crate::solver::{self, kkt, CapturePlan, SolveReport, SolverOptions};
use crate::Point;

/// Headings of every agent (unit vectors, or zero for captured attackers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlProfile {
    #[serde(with = "crate::serde_points")]
    pub attacker_controls: Vec<Point>,
    #[serde(with = "crate::serde_points::single")]
    pub defender_control: Point,
}

impl ControlProfile {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            attacker_controls: vec![Point::zeros(n); m],
            defender_control: Point::zeros(n),
        }
    }

    /// Largest control norm; admissible controls stay within 1.
    pub fn max_norm(&self) -> f64 {
        self.attacker_controls
            .iter()
            .chain(std::iter::once(&self.defender_control))
            .map(|u| u.norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn heading(from: &Point, to: &Point, what: impl FnOnce() -> String) -> Result<Point> {
    let d = to - from;
    let r = d.norm();
    if r < KERNEL_EPS {
        return Err(GameError::DegeneratePoint(what()));
    }
    Ok(d / r)
}

/// Every live attacker heads for its capture point and the defender for the
/// current phase's capture point.
pub fn cooperative_controls(state: &GameState, cfg: &GameConfig, plan: &CapturePlan) -> Result<ControlProfile> {
    state.check(cfg)?;
    if plan.phase != state.phase || plan.points.len() != cfg.m() - state.phase {
        return Err(GameError::DimensionMismatch {
            expected: cfg.m() - state.phase,
            found: plan.points.len(),
        });
    }
    let mut out = ControlProfile::zeros(cfg.m(), cfg.n);
    for (k, p) in plan.points.iter().enumerate() {
        let j = plan.phase + k;
        out.attacker_controls[j] = heading(&state.attackers[j], p, || format!("attacker {j} at its capture point"))?;
    }
    out.defender_control = heading(&state.defender, &plan.points[0], || "defender at the capture point".into())?;
    Ok(out)
}

/// Noncooperative plan with the stages whose minimizer was not unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePlan {
    pub plan: CapturePlan,
    /// Absolute indices of stages where distinct minimizers tied in value.
    pub tied_stages: Vec<usize>,
}

const STAGE_SAMPLES: u64 = 4;

/// Each attacker in turn minimizes its own proximity, given the capture
/// points already fixed by the attackers ahead of it. Weights play no role.
pub fn noncooperative_plan(state: &GameState, cfg: &GameConfig) -> Result<BaselinePlan> {
    state.check(cfg)?;
    let phase = state.phase;
    let opts = SolverOptions::default();
    let kkt_tol = cfg.tolerances.kkt_tol;
    let mut points: Vec<Point> = Vec::new();
    let mut multipliers = Vec::new();
    let mut worst_residual: f64 = 0.0;
    let mut tied_stages = Vec::new();
    let mut base = state.defender.clone();
    let mut head_start = 0.0;

    for i in phase..cfg.m() {
        let stage = ChainProgram {
            n: cfg.n,
            target: &cfg.target,
            weights: vec![1.0],
            anchors: vec![state.attackers[i].clone()],
            speeds: vec![cfg.speeds[i]],
            base: base.clone(),
            head_start,
        };
        let a = &state.attackers[i];
        if (a - &base).norm() < KERNEL_EPS && head_start == 0.0 {
            return Err(GameError::StageInfeasible { stage: i });
        }
        let mut starts = vec![a.clone()];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        rng.set_stream(i as u64);
        let nu = cfg.speeds[i];
        let k = 1.0 - nu * nu;
        let apo_center = (a - &base * (nu * nu)) / k;
        let apo_radius = nu * (a - &base).norm() / k;
        for _ in 0..STAGE_SAMPLES {
            starts.push(solver::sample_ball(&mut rng, &apo_center, apo_radius));
            if head_start > 0.0 {
                starts.push(solver::sample_ball(&mut rng, a, nu * head_start));
            }
        }
        let mut found: Vec<(f64, DVector<f64>, Vec<f64>, f64)> = Vec::new();
        for s in &starts {
            let Ok(run) = solver::ccp::run(&stage, s, &opts, kkt_tol) else {
                continue;
            };
            if run.iterations > opts.max_ccp_iters && run.residual > kkt_tol {
                continue;
            }
            found.push((stage.objective(run.x.as_slice()), run.x, run.lambda, run.residual));
        }
        if found.is_empty() {
            return Err(GameError::StageInfeasible { stage: i });
        }
        found.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                a.1.iter()
                    .zip(b.1.iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        let best = &found[0];
        if found[1..].iter().any(|f| {
            f.0 <= best.0 + cfg.tolerances.value_gap_tol && (&f.1 - &best.1).amax() > opts.dedup_radius
        }) {
            tied_stages.push(i);
        }
        let p = best.1.clone();
        head_start += (&p - &base).norm();
        base = p.clone();
        points.push(p);
        multipliers.push(best.2[0]);
        worst_residual = worst_residual.max(best.3);
    }

    let prog = ChainProgram::for_phase(state, cfg, phase);
    let x = ChainProgram::stack(&points);
    let active_set = kkt::active_set(&prog, x.as_slice(), cfg.tolerances.kkt_tol)
        .into_iter()
        .map(|j| j + phase)
        .collect();
    Ok(BaselinePlan {
        plan: CapturePlan {
            phase,
            value: prog.objective(x.as_slice()),
            points,
            multipliers,
            kkt_residual: worst_residual,
            active_set,
            certificates: Default::default(),
            objective_history: vec![],
        },
        tied_stages,
    })
}

/// Re-solves at `state`, injecting the previous best plan (its tail after a
/// capture) as the first start.
pub fn replan(state: &GameState, cfg: &GameConfig, previous: &SolveReport) -> Result<SolveReport> {
    replan_with(state, cfg, previous, &SolverOptions::default(), 0)
}

pub fn replan_with(
    state: &GameState,
    cfg: &GameConfig,
    previous: &SolveReport,
    opts: &SolverOptions,
    seed: u64,
) -> Result<SolveReport> {
    solver::multistart_solve_with(
        state,
        cfg,
        state.phase,
        opts,
        seed,
        std::slice::from_ref(&previous.best.points),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{point, solve_single, ProximityShape};
    use approx::assert_abs_diff_eq;

    fn instance() -> (GameState, GameConfig) {
        let cfg = GameConfig::new(
            vec![0.5],
            vec![1.0],
            ProximityShape::ball(&[0.0, 0.0], 0.5).unwrap(),
        )
        .unwrap();
        (GameState::new(vec![point(&[-2.0, 0.0])], point(&[2.0, 0.0])), cfg)
    }

    #[test]
    fn single_attacker_controls() {
        let (state, cfg) = instance();
        let plan = solve_single(&state, &cfg).unwrap();
        let c = cooperative_controls(&state, &cfg, &plan).unwrap();
        assert_abs_diff_eq!(c.attacker_controls[0][0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.attacker_controls[0][1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.defender_control[0], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.max_norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn baseline_matches_single_for_one_attacker() {
        let (state, cfg) = instance();
        let single = solve_single(&state, &cfg).unwrap();
        let base = noncooperative_plan(&state, &cfg).unwrap();
        assert!(base.plan.max_norm_distance(&single) < 1e-8);
        assert_abs_diff_eq!(base.plan.value, single.value, epsilon = 1e-10);
        assert!(base.tied_stages.is_empty());
    }

    #[test]
    fn coincident_defender_is_degenerate() {
        let (state, cfg) = instance();
        let mut plan = solve_single(&state, &cfg).unwrap();
        plan.points[0] = state.defender.clone();
        assert!(matches!(
            cooperative_controls(&state, &cfg, &plan),
            Err(GameError::DegeneratePoint(_))
        ));
    }
}
