//! Game dynamics under feedback strategies: stepping, capture detection,
//! full runs and saddle-point checks.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::model::{GameConfig, GameState};
use crate::solver::{multistart_solve_with, resolve_local, CapturePlan, SolveReport, SolverOptions};
use crate::strategies::{noncooperative_plan, replan_with, ControlProfile};
use crate::Point;

/// How the attackers choose their capture points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackerMode {
    Cooperative,
    Noncooperative,
}

/// A defender control law; outputs longer than 1 are rescaled to unit length.
pub trait DefenderPolicy: Send + Sync {
    fn control(&self, time: f64, state: &GameState, cfg: &GameConfig, plan: &CapturePlan) -> Point;
}

#[derive(Clone)]
pub enum DefenderMode {
    /// Head for the current capture point.
    Equilibrium,
    /// Equilibrium heading rotated by a fixed angle (radians) in the first two coordinates.
    FixedHeading(f64),
    Custom(Arc<dyn DefenderPolicy>),
}

impl fmt::Debug for DefenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Equilibrium => write!(f, "Equilibrium"),
            Self::FixedHeading(a) => write!(f, "FixedHeading({a})"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Plan once per phase instead of every step.
    pub open_loop: bool,
    /// Settings of the full multistart solves (start of the run and after failed tracking).
    pub solver: SolverOptions,
    /// Sampled starts added to the warm start when local tracking fails.
    pub replan_starts: usize,
    /// Run a full multistart solve every this many steps; 0 disables.
    pub global_every: usize,
    pub seed: u64,
    /// One attacker turns its equilibrium heading by a fixed angle.
    pub attacker_deviation: Option<(usize, f64)>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 200.0,
            open_loop: false,
            solver: SolverOptions::default(),
            replan_starts: 4,
            global_every: 0,
            seed: 0,
            attacker_deviation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureEvent {
    pub attacker: usize,
    pub time: f64,
    #[serde(with = "crate::serde_points::single")]
    pub point: Point,
    pub h_at_capture: f64,
    /// Capture happened strictly outside the target.
    pub outside_target: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    AllCaptured,
    /// Some attacker can reach (or reached) the target; no payoff is assigned.
    Escape,
    HorizonExceeded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    /// `times[k]` belongs to `states[k]`; steps ending in a capture are shortened.
    pub times: Vec<f64>,
    pub states: Vec<GameState>,
    /// `controls[k]` moves `states[k]` to `states[k + 1]`.
    pub controls: Vec<ControlProfile>,
    /// Payoff already realized plus the planned value, per step.
    pub value_trace: Vec<f64>,
    pub events: Vec<CaptureEvent>,
    pub realized_payoff: f64,
    pub outcome: Outcome,
    /// Value of the first plan, if one was found.
    pub initial_value: Option<f64>,
}

impl Trajectory {
    /// Weighted proximity recomputed from the capture events.
    pub fn payoff_from_events(&self, cfg: &GameConfig) -> f64 {
        self.events
            .iter()
            .map(|e| cfg.weights[e.attacker] * e.h_at_capture)
            .sum()
    }
}

/// Forward Euler step; captured attackers do not move.
pub fn step(state: &GameState, controls: &ControlProfile, cfg: &GameConfig, dt: f64) -> GameState {
    let mut next = state.clone();
    for j in state.phase..cfg.m() {
        next.attackers[j] += &controls.attacker_controls[j] * (dt * cfg.speeds[j]);
    }
    next.defender += &controls.defender_control * dt;
    next
}

/// Capture of the current phase's attacker, when within the capture radius.
/// The returned event carries time 0; the simulator fills in the clock.
pub fn detect_capture(state: &GameState, cfg: &GameConfig) -> Option<CaptureEvent> {
    let a = state.attackers.get(state.phase)?;
    if (a - &state.defender).norm() > cfg.capture_radius {
        return None;
    }
    capture_event(state, cfg)
}

fn capture_event(state: &GameState, cfg: &GameConfig) -> Option<CaptureEvent> {
    let j = state.phase;
    let a = state.attackers.get(j)?;
    let h = cfg.target.value_unchecked(a.as_slice());
    Some(CaptureEvent {
        attacker: j,
        time: 0.0,
        point: a.clone(),
        h_at_capture: h,
        outside_target: h > 0.0,
    })
}

/// First fraction of a linear step at which the separation drops to `eps`.
fn crossing(r0: &Point, r1: &Point, eps: f64) -> Option<f64> {
    let w = r1 - r0;
    let a = w.norm_squared();
    let b = r0.dot(&w);
    let c = r0.norm_squared() - eps * eps;
    if c <= 0.0 {
        return Some(0.0);
    }
    if a == 0.0 {
        return None;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let tau = (-b - disc.sqrt()) / a;
    (0.0..=1.0).contains(&tau).then_some(tau)
}

fn lerp_state(s0: &GameState, s1: &GameState, tau: f64) -> GameState {
    let mix = |a: &Point, b: &Point| a + (b - a) * tau;
    GameState {
        attackers: s0.attackers.iter().zip(&s1.attackers).map(|(a, b)| mix(a, b)).collect(),
        defender: mix(&s0.defender, &s1.defender),
        phase: s0.phase,
    }
}

fn rotate(u: &Point, angle: f64) -> Result<Point> {
    if u.len() < 2 {
        return Err(GameError::Unsupported("heading deviations need n >= 2".into()));
    }
    let (s, c) = angle.sin_cos();
    let mut out = u.clone();
    out[0] = c * u[0] - s * u[1];
    out[1] = s * u[0] + c * u[1];
    Ok(out)
}

/// Unit heading toward `to`, shortened so one step at `speed` does not overshoot.
fn approach(from: &Point, to: &Point, speed: f64, dt: f64) -> Point {
    let d = to - from;
    let r = d.norm();
    if r <= f64::EPSILON * (1.0 + from.amax()) {
        return Point::zeros(from.len());
    }
    d * ((r / (speed * dt)).min(1.0) / r)
}

fn clamp_unit(mut v: Point) -> Point {
    let r = v.norm();
    if r > 1.0 {
        v /= r;
    }
    v
}

/// Drops the captured attackers from a plan.
fn tail(plan: &CapturePlan, phase: usize) -> Option<CapturePlan> {
    let k = phase.checked_sub(plan.phase)?;
    if k >= plan.points.len() {
        return None;
    }
    let mut out = plan.clone();
    out.phase = phase;
    out.points.drain(..k);
    out.multipliers.drain(..k);
    out.active_set.retain(|&j| j >= phase);
    Some(out)
}

fn single_report(plan: CapturePlan, cfg: &GameConfig) -> SolveReport {
    let in_capturable_set = plan
        .points
        .iter()
        .all(|p| cfg.target.value_unchecked(p.as_slice()) > 0.0);
    SolveReport {
        best: plan.clone(),
        stationary_points: vec![plan],
        ambiguous: false,
        in_capturable_set,
        failed_starts: 0,
    }
}

struct Planner<'c> {
    cfg: &'c GameConfig,
    mode: AttackerMode,
    opts: SimOptions,
}

impl Planner<'_> {
    fn fresh(&self, state: &GameState, warm: Option<&CapturePlan>) -> Result<SolveReport> {
        match self.mode {
            AttackerMode::Noncooperative => {
                let base = noncooperative_plan(state, self.cfg)?;
                let mut r = single_report(base.plan, self.cfg);
                r.ambiguous = !base.tied_stages.is_empty();
                Ok(r)
            }
            AttackerMode::Cooperative => {
                let injected: Vec<Vec<Point>> = warm.map(|p| p.points.clone()).into_iter().collect();
                multistart_solve_with(state, self.cfg, state.phase, &self.opts.solver, self.opts.seed, &injected)
            }
        }
    }

    /// Tracks the previous plan by Newton refinement, widening to sampled
    /// starts when tracking fails.
    fn track(&self, state: &GameState, prev: &SolveReport) -> Result<SolveReport> {
        if self.mode == AttackerMode::Noncooperative {
            return self.fresh(state, None);
        }
        let Some(warm) = tail(&prev.best, state.phase) else {
            return self.fresh(state, None);
        };
        if let Ok(p) = resolve_local(&warm, state, self.cfg) {
            if p.kkt_residual <= self.cfg.tolerances.kkt_tol {
                return Ok(single_report(p, self.cfg));
            }
        }
        let opts = SolverOptions {
            n_starts: self.opts.replan_starts,
            ..self.opts.solver
        };
        let mut prev = prev.clone();
        prev.best = warm;
        replan_with(state, self.cfg, &prev, &opts, self.opts.seed)
    }
}

/// Runs the game from `x0` until every attacker is captured, an attacker
/// escapes, or the horizon passes.
pub fn simulate(
    x0: &GameState,
    cfg: &GameConfig,
    attacker_mode: AttackerMode,
    defender_mode: &DefenderMode,
    opts: &SimOptions,
) -> Result<Trajectory> {
    x0.check(cfg)?;
    if !(opts.dt > 0.0 && opts.horizon > 0.0) {
        return Err(GameError::InvalidConfig(vec!["dt and horizon must be positive".into()]));
    }
    if let Some((j, _)) = opts.attacker_deviation {
        if j >= cfg.m() {
            return Err(GameError::IndexOutOfRange {
                index: j,
                lo: 0,
                hi: cfg.m() - 1,
            });
        }
    }
    let planner = Planner {
        cfg,
        mode: attacker_mode,
        opts: *opts,
    };
    let dt = opts.dt;
    let mut state = x0.clone();
    let mut t = 0.0;
    let mut traj = Trajectory {
        dt,
        times: vec![0.0],
        states: vec![state.clone()],
        controls: vec![],
        value_trace: vec![],
        events: vec![],
        realized_payoff: 0.0,
        outcome: Outcome::HorizonExceeded,
        initial_value: None,
    };
    let mut report: Option<SolveReport> = None;
    let mut phase_start = true;
    let mut steps = 0usize;
    // Set when a step ended exactly at the capture distance; rounding in the
    // interpolation must not hide the capture.
    let mut crossed = false;

    loop {
        let event = if crossed {
            capture_event(&state, cfg)
        } else {
            detect_capture(&state, cfg)
        };
        crossed = false;
        if let Some(mut ev) = event {
            ev.time = t;
            traj.realized_payoff += cfg.weights[ev.attacker] * ev.h_at_capture;
            let inside = !ev.outside_target;
            traj.events.push(ev);
            if inside {
                traj.outcome = Outcome::Escape;
                break;
            }
            state.phase += 1;
            *traj.states.last_mut().expect("nonempty") = state.clone();
            if state.phase == cfg.m() {
                traj.outcome = Outcome::AllCaptured;
                break;
            }
            phase_start = true;
            continue;
        }
        if t >= opts.horizon {
            break;
        }

        let replan_now = report.is_none() || !opts.open_loop || phase_start;
        if replan_now {
            let global = opts.global_every > 0 && steps.is_multiple_of(opts.global_every);
            let next = match &report {
                Some(prev) if !global => planner.track(&state, prev),
                Some(prev) => planner.fresh(&state, tail(&prev.best, state.phase).as_ref()),
                None => planner.fresh(&state, None),
            };
            match next {
                Ok(r) if r.in_capturable_set => report = Some(r),
                _ => {
                    traj.outcome = Outcome::Escape;
                    break;
                }
            }
            phase_start = false;
        }
        let rep = report.as_ref().expect("planned above");
        let plan = tail(&rep.best, state.phase).expect("plan covers the phase");
        traj.initial_value.get_or_insert(rep.best.value);
        traj.value_trace.push(traj.realized_payoff + plan.value);

        let mut controls = ControlProfile::zeros(cfg.m(), cfg.n);
        for (k, p) in plan.points.iter().enumerate() {
            let j = state.phase + k;
            let mut u = approach(&state.attackers[j], p, cfg.speeds[j], dt);
            if let Some((dj, angle)) = opts.attacker_deviation {
                if dj == j {
                    u = rotate(&u, angle)?;
                }
            }
            controls.attacker_controls[j] = u;
        }
        let target = &plan.points[0];
        controls.defender_control = match defender_mode {
            DefenderMode::Equilibrium => approach(&state.defender, target, 1.0, dt),
            DefenderMode::FixedHeading(angle) => rotate(&approach(&state.defender, target, 1.0, dt), *angle)?,
            DefenderMode::Custom(policy) => clamp_unit(policy.control(t, &state, cfg, &plan)),
        };

        let next = step(&state, &controls, cfg, dt);
        let j = state.phase;
        let r0 = &state.attackers[j] - &state.defender;
        let r1 = &next.attackers[j] - &next.defender;
        match crossing(&r0, &r1, cfg.capture_radius) {
            Some(tau) => {
                state = lerp_state(&state, &next, tau);
                t += tau * dt;
                crossed = true;
            }
            None => {
                state = next;
                t += dt;
            }
        }
        steps += 1;
        traj.controls.push(controls);
        traj.states.push(state.clone());
        traj.times.push(t);
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviator {
    Defender,
    Attacker(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleRun {
    pub deviator: Deviator,
    pub deviation: f64,
    pub outcome: Outcome,
    pub payoff: f64,
    /// Ended in an escape, so the payoff is not compared.
    pub excluded: bool,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    /// Payoff of equilibrium play.
    pub j_star: f64,
    pub tolerance: f64,
    pub runs: Vec<SaddleRun>,
    pub violations: usize,
    pub excluded: usize,
}

/// Plays every heading deviation once by the defender and once by each
/// attacker against equilibrium replanning. A defender deviation must not raise
/// the payoff above `J* + 10 dt`, an attacker deviation must not lower it below
/// `J* - 10 dt`. Runs that end in an escape leave the capturable set, where the
/// payoff is undefined; they are excluded and counted. A run that exceeds the
/// horizon is a violation.
pub fn saddle_check(x0: &GameState, cfg: &GameConfig, deviations: &[f64], opts: &SimOptions) -> Result<SaddleReport> {
    let eq = simulate(x0, cfg, AttackerMode::Cooperative, &DefenderMode::Equilibrium, opts)?;
    if eq.outcome != Outcome::AllCaptured {
        return Err(GameError::Numerical(format!(
            "equilibrium run ended with {:?}",
            eq.outcome
        )));
    }
    let j_star = eq.realized_payoff;
    let tol = 10.0 * opts.dt;
    let mut runs = Vec::new();
    for &dev in deviations {
        let d = simulate(x0, cfg, AttackerMode::Cooperative, &DefenderMode::FixedHeading(dev), opts)?;
        runs.push(SaddleRun {
            deviator: Deviator::Defender,
            deviation: dev,
            outcome: d.outcome,
            payoff: d.realized_payoff,
            excluded: d.outcome == Outcome::Escape,
            violation: match d.outcome {
                Outcome::AllCaptured => d.realized_payoff > j_star + tol,
                Outcome::Escape => false,
                Outcome::HorizonExceeded => true,
            },
        });
        for j in 0..cfg.m() {
            let o = SimOptions {
                attacker_deviation: Some((j, dev)),
                ..*opts
            };
            let a = simulate(x0, cfg, AttackerMode::Cooperative, &DefenderMode::Equilibrium, &o)?;
            runs.push(SaddleRun {
                deviator: Deviator::Attacker(j),
                deviation: dev,
                outcome: a.outcome,
                payoff: a.realized_payoff,
                excluded: a.outcome == Outcome::Escape,
                violation: match a.outcome {
                    Outcome::AllCaptured => a.realized_payoff < j_star - tol,
                    Outcome::Escape => false,
                    Outcome::HorizonExceeded => true,
                },
            });
        }
    }
    let violations = runs.iter().filter(|r| r.violation).count();
    let excluded = runs.iter().filter(|r| r.excluded).count();
    Ok(SaddleReport {
        j_star,
        tolerance: tol,
        runs,
        violations,
        excluded,
    })
}
