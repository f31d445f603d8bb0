use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tguard_core::{
    isaacs_residual, multistart_solve, resolve_local, GameConfig, GameState, SolveReport,
    ValueGradient,
};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::montecarlo::N_STARTS;

/// Relative tolerance for finite-difference gradient agreement.
pub const FD_TOL: f64 = 1e-4;
pub const FD_STEP: f64 = 1e-5;
/// Allowed gap in the terminal-cost check.
pub const BOUNDARY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCheck {
    pub instance: u64,
    pub value: f64,
    pub kkt_residual: f64,
    pub kkt_pass: bool,
    pub certified: bool,
    pub ambiguous: bool,
    pub all_active: bool,
    /// Max-norm gap between the multiplier and finite-difference gradients,
    /// relative to `max(1, |grad|_inf)`.
    pub fd_gap: Option<f64>,
    pub isaacs_residual: Option<f64>,
    pub isaacs_residual_fd: Option<f64>,
    pub boundary_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub instances: usize,
    pub solved: usize,
    pub kkt_pass: usize,
    pub certified: usize,
    pub certified_unambiguous: usize,
    pub all_active: usize,
    pub fd_checked: usize,
    pub fd_agree: usize,
    pub isaacs_max: f64,
    pub isaacs_fd_max: f64,
    pub boundary_checked: usize,
    pub boundary_pass: usize,
    pub checks: Vec<InstanceCheck>,
}

impl VerifyReport {
    pub fn kkt_rate(&self) -> f64 {
        self.kkt_pass as f64 / self.instances as f64
    }

    pub fn certified_rate(&self) -> f64 {
        self.certified as f64 / self.instances as f64
    }

    pub fn fd_rate(&self) -> f64 {
        self.fd_agree as f64 / self.fd_checked.max(1) as f64
    }

    pub fn all_active_rate(&self) -> f64 {
        self.all_active as f64 / self.certified_unambiguous.max(1) as f64
    }
}

/// Central differences of the value in every state coordinate, each side
/// re-solved locally from the plan. `None` when a re-solve fails.
pub fn fd_value_gradient(rep: &SolveReport, state: &GameState, cfg: &GameConfig, delta: f64) -> Option<DVector<f64>> {
    let x = state.stacked();
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        let mut vals = [0.0; 2];
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            let mut xs = x.clone();
            xs[i] += sign * delta;
            let s = GameState::from_stacked(&xs, cfg.n, state.phase);
            let p = resolve_local(&rep.best, &s, cfg).ok()?;
            if p.kkt_residual > cfg.tolerances.kkt_tol {
                return None;
            }
            vals[k] = p.value;
        }
        g[i] = (vals[0] - vals[1]) / (2.0 * delta);
    }
    Some(g)
}

/// Puts attacker 0 right next to the defender and compares the value with
/// the capture cost plus the value of the game that remains after the capture.
pub fn boundary_gap(state: &GameState, cfg: &GameConfig, seed: u64) -> Result<f64> {
    let mut x = state.clone();
    let dir = (&state.attackers[0] - &state.defender).normalize();
    x.attackers[0] = &state.defender + dir * (10.0 * cfg.capture_radius);
    let full = multistart_solve(&x, cfg, 0, N_STARTS, seed)?;
    let p1 = &full.best.points[0];
    let t = (p1 - &x.defender).norm();
    let mut after = x.clone();
    for (j, p) in full.best.points.iter().enumerate().skip(1) {
        let d = p - &x.attackers[j];
        let reach = cfg.speeds[j] * t;
        after.attackers[j] = if reach >= d.norm() {
            p.clone()
        } else {
            &x.attackers[j] + d.normalize() * reach
        };
    }
    after.attackers[0] = p1.clone();
    after.defender = p1.clone();
    after.phase = 1;
    let rest = if cfg.m() > 1 {
        multistart_solve(&after, cfg, 1, N_STARTS, seed)?.best.value
    } else {
        0.0
    };
    let terminal = cfg.weights[0] * cfg.target.value(p1)? + rest;
    Ok((full.best.value - terminal).abs())
}

fn check(cfg: &ExperimentConfig, instance: u64) -> InstanceCheck {
    let game = &cfg.game;
    let state = cfg.sample_state(instance);
    let seed = cfg.seed.wrapping_add(instance);
    let mut c = InstanceCheck {
        instance,
        value: f64::NAN,
        kkt_residual: f64::NAN,
        kkt_pass: false,
        certified: false,
        ambiguous: false,
        all_active: false,
        fd_gap: None,
        isaacs_residual: None,
        isaacs_residual_fd: None,
        boundary_gap: None,
        error: None,
    };
    let rep = match multistart_solve(&state, game, 0, N_STARTS, seed) {
        Ok(r) => r,
        Err(e) => {
            c.error = Some(e.to_string());
            return c;
        }
    };
    let best = &rep.best;
    c.value = best.value;
    c.kkt_residual = best.kkt_residual;
    c.kkt_pass = best.kkt_residual <= game.tolerances.kkt_tol;
    c.certified = best.certificates.all();
    c.ambiguous = rep.ambiguous;
    c.all_active = best.active_set.len() == game.m();
    if c.certified {
        if let Ok(g) = tguard_core::value_gradient(best, &state, game) {
            c.isaacs_residual = Some(isaacs_residual(&g, game).abs());
        }
    }
    if c.certified && !c.ambiguous {
        if let Ok(g) = rep.value_gradient(&state, game) {
            let g = g.stacked();
            c.fd_gap = Some(match fd_value_gradient(&rep, &state, game, FD_STEP) {
                Some(fd) => {
                    let fg = ValueGradient::from_stacked(&fd, game.n);
                    c.isaacs_residual_fd = Some(isaacs_residual(&fg, game).abs());
                    (&fd - &g).amax() / g.amax().max(1.0)
                }
                None => f64::INFINITY,
            });
        }
    }
    match boundary_gap(&state, game, seed) {
        Ok(gap) => c.boundary_gap = Some(gap),
        Err(e) => c.error = Some(format!("boundary check: {e}")),
    }
    c
}

/// Solves `n_instances` sampled states (streams seeded by `seed`) and checks
/// stationarity, certificates, the value gradient, the Isaacs identity and the
/// terminal condition.
pub fn verify(cfg: &ExperimentConfig, n_instances: usize, seed: u64) -> VerifyReport {
    let cfg = ExperimentConfig { seed, ..cfg.clone() };
    let checks: Vec<InstanceCheck> = (0..n_instances as u64)
        .into_par_iter()
        .map(|i| check(&cfg, i))
        .collect();
    let count = |f: &dyn Fn(&InstanceCheck) -> bool| checks.iter().filter(|c| f(c)).count();
    let max = |f: &dyn Fn(&InstanceCheck) -> Option<f64>| checks.iter().filter_map(f).fold(0.0, f64::max);
    VerifyReport {
        instances: n_instances,
        solved: count(&|c| c.value.is_finite()),
        kkt_pass: count(&|c| c.kkt_pass),
        certified: count(&|c| c.certified),
        certified_unambiguous: count(&|c| c.certified && !c.ambiguous),
        all_active: count(&|c| c.certified && !c.ambiguous && c.all_active),
        fd_checked: count(&|c| c.fd_gap.is_some()),
        fd_agree: count(&|c| c.fd_gap.is_some_and(|g| g <= FD_TOL)),
        isaacs_max: max(&|c| c.isaacs_residual),
        isaacs_fd_max: max(&|c| c.isaacs_residual_fd),
        boundary_checked: count(&|c| c.boundary_gap.is_some()),
        boundary_pass: count(&|c| c.boundary_gap.is_some_and(|g| g <= BOUNDARY_TOL)),
        checks,
    }
}
