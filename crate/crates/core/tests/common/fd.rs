//! Finite-difference references that re-solve the program at perturbed states.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use tguard_core::{
    constraint_g, constraint_gradients, objective_f, resolve_local, CapturePlan, GameConfig, GameState, Point,
};

/// Central differences of the value over the stacked state `[x_A.., x_D]`,
/// warm-starting every re-solve from `plan`.
pub fn value_gradient(plan: &CapturePlan, state: &GameState, cfg: &GameConfig, delta: f64) -> Option<DVector<f64>> {
    let x = state.stacked();
    let mut out = DVector::zeros(x.len());
    for k in 0..x.len() {
        let mut v = [0.0; 2];
        for (slot, sign) in [(0, 1.0), (1, -1.0)] {
            let mut y = x.clone();
            y[k] += sign * delta;
            let s = GameState::from_stacked(&y, cfg.n, state.phase);
            let p = resolve_local(plan, &s, cfg).ok()?;
            if p.kkt_residual > cfg.tolerances.kkt_tol {
                return None;
            }
            v[slot] = p.value;
        }
        out[k] = (v[0] - v[1]) / (2.0 * delta);
    }
    Some(out)
}

fn lagrangian(points: &[Point], lambda: &[f64], state: &GameState, cfg: &GameConfig, phase: usize) -> f64 {
    let mut l = objective_f(points, cfg, phase).unwrap();
    for (k, lam) in lambda.iter().enumerate() {
        l += lam * constraint_g(phase + k, points, state, cfg, phase).unwrap();
    }
    l
}

/// Smallest eigenvalue of the finite-difference Lagrangian Hessian projected
/// on the null space of the active constraint gradients.
pub fn projected_hessian_min_eig(plan: &CapturePlan, state: &GameState, cfg: &GameConfig, step: f64) -> Option<f64> {
    let n = cfg.n;
    let phase = plan.phase;
    let full = plan.padded_points(state);
    let d = plan.points.len() * n;
    let eval = |y: &DVector<f64>| {
        let mut pts = full.clone();
        for k in 0..plan.points.len() {
            pts[phase + k] = y.rows(k * n, n).into_owned();
        }
        lagrangian(&pts, &plan.multipliers, state, cfg, phase)
    };
    let mut x = DVector::zeros(d);
    for (k, p) in plan.points.iter().enumerate() {
        x.rows_mut(k * n, n).copy_from(p);
    }
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut y = x.clone();
                y[i] += si * step;
                y[j] += sj * step;
                s += w * eval(&y);
            }
            h[(i, j)] = s / (4.0 * step * step);
        }
    }
    let mut jac = DMatrix::zeros(plan.active_set.len(), d);
    for (r, &j) in plan.active_set.iter().enumerate() {
        let g = constraint_gradients(j, &full, state, cfg, phase).ok()?;
        for k in 0..plan.points.len() {
            for c in 0..n {
                jac[(r, k * n + c)] = g.wrt_points[k][c];
            }
        }
    }
    let z = null_space(&jac, d);
    if z.ncols() == 0 {
        return None;
    }
    let proj = z.transpose() * h * &z;
    let proj = (&proj + proj.transpose()) * 0.5;
    Some(proj.symmetric_eigen().eigenvalues.min())
}

/// Orthonormal basis of `{y : J y = 0}` from the eigenvectors of `J^T J`
/// belonging to its `d - rank` smallest eigenvalues.
fn null_space(jac: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    if jac.nrows() == 0 {
        return DMatrix::identity(d, d);
    }
    let rank = jac.singular_values().iter().filter(|s| **s > 1e-10).count();
    let eig = (jac.transpose() * jac).symmetric_eigen();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let cols: Vec<DVector<f64>> = idx[..d - rank]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(d, 0);
    }
    DMatrix::from_columns(&cols)
}
