//! Convex-concave procedure for the capture-point program.
//!
//! Every `-|p_k - p_{k-1}|` term of the reachability constraints is concave.
//! At the current iterate it is replaced by its affine majorant `-u_k . (p_k - p_{k-1})`
//! with `u_k` the unit segment direction, which makes each subproblem convex and
//! keeps every iterate feasible for the original program.

use nalgebra::{DMatrix, DVector};

use super::chain::ChainProgram;
use super::convex::{al_solve, AlOptions, ConvexProblem};
use super::kkt::{guess_active, polish, residual, KktPoint};
use super::SolverOptions;
use crate::error::{GameError, Result};

/// Convex inner approximation of the program, linearized at a fixed iterate.
pub(crate) struct Convexified<'p, 'a> {
    pub prog: &'p ChainProgram<'a>,
    pub dirs: Vec<DVector<f64>>,
    pub delta: f64,
}

impl<'p, 'a> Convexified<'p, 'a> {
    pub fn at(prog: &'p ChainProgram<'a>, x: &[f64], delta: f64) -> Self {
        let dirs = (0..prog.q())
            .map(|k| {
                let s = prog.segment(x, k);
                let r = (s.norm_squared() + delta * delta).sqrt();
                s / r
            })
            .collect();
        Self { prog, dirs, delta }
    }

    fn own_smoothed(&self, x: &[f64], j: usize) -> (DVector<f64>, f64) {
        let z = self.prog.own(x, j);
        let r = (z.norm_squared() + self.delta * self.delta).sqrt();
        (z, r)
    }
}

impl ConvexProblem for Convexified<'_, '_> {
    fn dim(&self) -> usize {
        self.prog.dim()
    }

    fn n_constraints(&self) -> usize {
        self.prog.q()
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        self.prog.objective(x.as_slice())
    }

    fn objective_derivs(&self, x: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        self.prog.objective_derivs(x.as_slice(), grad, hess);
    }

    fn constraint(&self, j: usize, x: &DVector<f64>) -> f64 {
        let x = x.as_slice();
        let (_, r) = self.own_smoothed(x, j);
        let mut lin = 0.0;
        for k in 0..=j {
            lin += self.dirs[k].dot(&self.prog.segment(x, k));
        }
        r / self.prog.speeds[j] - self.prog.head_start - lin
    }

    fn constraint_derivs(
        &self,
        j: usize,
        x: &DVector<f64>,
        grad: &mut DVector<f64>,
        hess: &mut DMatrix<f64>,
    ) {
        let n = self.prog.n;
        let nu = self.prog.speeds[j];
        let (z, r) = self.own_smoothed(x.as_slice(), j);
        grad.fill(0.0);
        hess.fill(0.0);
        grad.rows_mut(j * n, n).axpy(1.0 / (nu * r), &z, 1.0);
        for k in 0..=j {
            grad.rows_mut(k * n, n).axpy(-1.0, &self.dirs[k], 1.0);
            if k > 0 {
                grad.rows_mut((k - 1) * n, n).axpy(1.0, &self.dirs[k], 1.0);
            }
        }
        let mut block = DMatrix::identity(n, n) / r;
        block.ger(-1.0 / (r * r * r), &z, &z, 1.0);
        hess.view_mut((j * n, j * n), (n, n)).copy_from(&(block / nu));
    }
}

/// `min |x - start|^2` over the convexified feasible set (phase-1 projection).
struct Projection<'c, 'p, 'a> {
    inner: &'c Convexified<'p, 'a>,
    start: DVector<f64>,
}

impl ConvexProblem for Projection<'_, '_, '_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn n_constraints(&self) -> usize {
        self.inner.n_constraints()
    }
    fn objective(&self, x: &DVector<f64>) -> f64 {
        (x - &self.start).norm_squared()
    }
    fn objective_derivs(&self, x: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        grad.copy_from(&((x - &self.start) * 2.0));
        hess.fill_with_identity();
        *hess *= 2.0;
    }
    fn constraint(&self, j: usize, x: &DVector<f64>) -> f64 {
        self.inner.constraint(j, x)
    }
    fn constraint_derivs(&self, j: usize, x: &DVector<f64>, g: &mut DVector<f64>, h: &mut DMatrix<f64>) {
        self.inner.constraint_derivs(j, x, g, h)
    }
}

fn feas_tol(x: &DVector<f64>) -> f64 {
    1e-12 * (1.0 + x.amax())
}

/// Moves a start into the feasible set: a penalty projection first, then a
/// pull toward the attackers' own positions (always feasible).
pub(crate) fn make_feasible(prog: &ChainProgram, start: &DVector<f64>, delta: f64) -> Result<DVector<f64>> {
    if prog.max_violation(start.as_slice()) <= feas_tol(start) {
        return Ok(start.clone());
    }
    let lin = Convexified::at(prog, start.as_slice(), delta);
    let proj = Projection {
        inner: &lin,
        start: start.clone(),
    };
    let out = al_solve(&proj, start.clone(), None, &AlOptions::default());
    if prog.max_violation(out.x.as_slice()) <= feas_tol(&out.x) {
        return Ok(out.x);
    }
    let anchor = prog.anchor_stack();
    let mut t = 1.0;
    for _ in 0..60 {
        t *= 0.5;
        let x = &anchor + (start - &anchor) * t;
        if prog.max_violation(x.as_slice()) <= feas_tol(&x) {
            return Ok(x);
        }
    }
    if prog.max_violation(anchor.as_slice()) <= feas_tol(&anchor) {
        return Ok(anchor);
    }
    Err(GameError::InfeasibleStart)
}

#[derive(Debug, Clone)]
pub(crate) struct CcpRun {
    pub x: DVector<f64>,
    pub lambda: Vec<f64>,
    pub residual: f64,
    pub history: Vec<f64>,
    pub iterations: usize,
}

fn try_polish(prog: &ChainProgram, x: &DVector<f64>, mu: &[f64]) -> Option<KktPoint> {
    let active = guess_active(prog, x.as_slice(), mu);
    polish(prog, x, mu, active).ok()
}

/// Runs the procedure from `start` and refines the limit to a KKT point.
pub(crate) fn run(
    prog: &ChainProgram,
    start: &DVector<f64>,
    opts: &SolverOptions,
    kkt_tol: f64,
) -> Result<CcpRun> {
    let mut x = make_feasible(prog, start, opts.smoothing)?;
    let mut value = prog.objective(x.as_slice());
    let mut history = vec![value];
    let mut mu: Option<Vec<f64>> = None;
    let al = AlOptions::default();
    let kkt_target = kkt_tol * 1e-2;

    let accept = |cand: &KktPoint, x: &DVector<f64>, value: f64| -> Option<(f64, f64)> {
        let v = prog.objective(cand.x.as_slice());
        let res = residual(prog, cand.x.as_slice(), &cand.lambda).ok()?;
        let close = (&cand.x - x).amax() <= 1e-2 * (1.0 + x.amax());
        (res <= kkt_target && v <= value + 1e-9 * (1.0 + value.abs()) && close).then_some((v, res))
    };

    for it in 1..=opts.max_ccp_iters {
        let sub = Convexified::at(prog, x.as_slice(), opts.smoothing);
        let out = al_solve(&sub, x.clone(), mu.as_deref(), &al);
        let new_value = prog.objective(out.x.as_slice());
        let decrease = value - new_value;
        // An inexact subproblem solve can land marginally above the previous
        // iterate; keep the better point so the recorded sequence never rises.
        if new_value <= value {
            x = out.x;
            value = new_value;
        }
        mu = Some(out.mu);
        history.push(value);

        let m = mu.as_deref().unwrap_or(&[]);
        let stalled = decrease < opts.ccp_tol * (1.0 + value.abs());
        if decrease < 1e-6 * (1.0 + value.abs()) || stalled {
            if let Some(cand) = try_polish(prog, &x, m) {
                if let Some((v, res)) = accept(&cand, &x, value) {
                    history.push(v);
                    return Ok(CcpRun {
                        x: cand.x,
                        lambda: cand.lambda,
                        residual: res,
                        history,
                        iterations: it,
                    });
                }
            }
        }
        if stalled {
            let lambda: Vec<f64> = m.to_vec();
            let res = residual(prog, x.as_slice(), &lambda).unwrap_or(f64::INFINITY);
            return Ok(CcpRun {
                x,
                lambda,
                residual: res,
                history,
                iterations: it,
            });
        }
    }
    let lambda = mu.unwrap_or_else(|| vec![0.0; prog.q()]);
    let res = residual(prog, x.as_slice(), &lambda).unwrap_or(f64::INFINITY);
    Ok(CcpRun {
        x,
        lambda,
        residual: res,
        history,
        iterations: opts.max_ccp_iters + 1,
    })
}
