//! Multistart globalization of the convex-concave procedure.

use std::cmp::Ordering;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{ccp_solve_with, check_phase, CapturePlan, SolveReport, SolverOptions};
use crate::error::{GameError, Result};
use crate::model::{GameConfig, GameState};
use crate::Point;

/// Uniform sample from the ball of `radius` around `center`.
pub(crate) fn sample_ball(rng: &mut ChaCha8Rng, center: &Point, radius: f64) -> Point {
    let n = center.len();
    let dir = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = dir.norm();
    if norm == 0.0 || radius <= 0.0 {
        return center.clone();
    }
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    center + dir * (r / norm)
}

/// Start `index` of the seeded stream: the first point uniform in the
/// Apollonius region of the phase attacker, later points uniform in the
/// region each attacker covers while the defender travels the partial chain.
fn sample_start(state: &GameState, cfg: &GameConfig, phase: usize, seed: u64, index: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let d = &state.defender;
    let a0 = &state.attackers[phase];
    let nu = cfg.speeds[phase];
    let sep = (a0 - d).norm();
    let k = 1.0 - nu * nu;
    let center = (a0 - d * (nu * nu)) / k;
    let mut points = vec![sample_ball(&mut rng, &center, nu * sep / k)];
    let mut path = (&points[0] - d).norm();
    for j in phase + 1..cfg.m() {
        let p = sample_ball(&mut rng, &state.attackers[j], cfg.speeds[j] * path);
        path += (&p - points.last().expect("nonempty")).norm();
        points.push(p);
    }
    points
}

fn plan_order(a: &CapturePlan, b: &CapturePlan) -> Ordering {
    a.value.total_cmp(&b.value).then_with(|| a.lex_cmp(b))
}

/// Multistart solve with default options.
pub fn multistart_solve(
    state: &GameState,
    cfg: &GameConfig,
    phase: usize,
    n_starts: usize,
    seed: u64,
) -> Result<SolveReport> {
    let opts = SolverOptions {
        n_starts,
        ..SolverOptions::default()
    };
    multistart_solve_with(state, cfg, phase, &opts, seed, &[])
}

/// Multistart solve. `injected` starts (full plans for the remaining
/// attackers, or longer plans whose tail is used) run before the sampled ones.
pub fn multistart_solve_with(
    state: &GameState,
    cfg: &GameConfig,
    phase: usize,
    opts: &SolverOptions,
    seed: u64,
    injected: &[Vec<Point>],
) -> Result<SolveReport> {
    check_phase(state, cfg, phase)?;
    if opts.n_starts == 0 && injected.is_empty() {
        return Err(GameError::InvalidConfig(vec!["n_starts must be at least 1".into()]));
    }
    let q = cfg.m() - phase;
    let mut starts: Vec<Vec<Point>> = injected
        .iter()
        .filter(|s| s.len() >= q)
        .map(|s| s[s.len() - q..].to_vec())
        .collect();
    starts.extend((0..opts.n_starts as u64).map(|i| sample_start(state, cfg, phase, seed, i)));

    let outcomes: Vec<Result<CapturePlan>> = starts
        .par_iter()
        .map(|s| ccp_solve_with(state, cfg, phase, s, opts))
        .collect();

    let kkt_tol = cfg.tolerances.kkt_tol;
    let mut converged = Vec::new();
    let mut rough = Vec::new();
    let mut failed = 0;
    let mut first_error = None;
    for o in outcomes {
        match o {
            Ok(p) if p.kkt_residual <= kkt_tol => converged.push(p),
            Ok(p) => {
                failed += 1;
                rough.push(p);
            }
            Err(GameError::MaxIterations { last, .. }) => {
                failed += 1;
                rough.push(*last);
            }
            Err(e) => {
                failed += 1;
                first_error.get_or_insert(e);
            }
        }
    }
    // Unconverged iterates are only used when nothing converged.
    let mut pool = if converged.is_empty() { rough } else { converged };
    if pool.is_empty() {
        let msg = first_error.map_or_else(|| "no starts".to_string(), |e| e.to_string());
        return Err(GameError::AllStartsFailed(msg));
    }
    pool.sort_by(plan_order);

    let mut distinct: Vec<CapturePlan> = Vec::new();
    for p in pool {
        if distinct
            .iter()
            .all(|d| d.max_norm_distance(&p) > opts.dedup_radius)
        {
            distinct.push(p);
        }
    }
    let best = distinct[0].clone();
    let gap = cfg.tolerances.value_gap_tol;
    let near: Vec<&CapturePlan> = distinct
        .iter()
        .filter(|p| p.value <= best.value + gap)
        .collect();
    let in_capturable_set = near.iter().all(|p| {
        p.points
            .iter()
            .all(|x| cfg.target.value_unchecked(x.as_slice()) > 0.0)
    });
    Ok(SolveReport {
        ambiguous: near.len() > 1,
        in_capturable_set,
        best,
        stationary_points: distinct,
        failed_starts: failed,
    })
}
