//! First- and second-order optimality machinery on the exact (unsmoothed) program:
//! Newton refinement of KKT points, the KKT residual and the LICQ / strict
//! complementarity / second-order sufficiency checks.

use nalgebra::{DMatrix, DVector};

use super::chain::ChainProgram;
use super::Certificates;
use crate::error::{GameError, Result};

#[derive(Debug, Clone)]
pub(crate) struct KktPoint {
    pub x: DVector<f64>,
    /// One multiplier per constraint (zero off the active set).
    pub lambda: Vec<f64>,
}

/// Gradient of the Lagrangian with respect to the capture points.
pub(crate) fn lagrangian_grad(prog: &ChainProgram, x: &[f64], lambda: &[f64]) -> Result<DVector<f64>> {
    let d = prog.dim();
    let mut grad = DVector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);
    prog.objective_derivs(x, &mut grad, &mut hess);
    let mut cg = DVector::zeros(d);
    for (j, &l) in lambda.iter().enumerate() {
        if l != 0.0 {
            prog.constraint_grad(j, x, &mut cg)?;
            grad.axpy(l, &cg, 1.0);
        }
    }
    Ok(grad)
}

/// Hessian of the Lagrangian with respect to the capture points.
pub(crate) fn lagrangian_hess(prog: &ChainProgram, x: &[f64], lambda: &[f64]) -> Result<DMatrix<f64>> {
    let d = prog.dim();
    let mut grad = DVector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);
    prog.objective_derivs(x, &mut grad, &mut hess);
    for (j, &l) in lambda.iter().enumerate() {
        if l != 0.0 {
            prog.constraint_hess_add(j, x, l, &mut hess)?;
        }
    }
    Ok(hess)
}

/// Max of stationarity, primal feasibility, dual feasibility and complementarity violations.
pub(crate) fn residual(prog: &ChainProgram, x: &[f64], lambda: &[f64]) -> Result<f64> {
    let station = lagrangian_grad(prog, x, lambda)?.amax();
    let g = prog.constraints(x);
    let mut worst = station;
    for (gj, lj) in g.iter().zip(lambda) {
        worst = worst.max(gj.max(0.0)).max((-lj).max(0.0)).max((lj * gj).abs());
    }
    Ok(worst)
}

/// Newton's method on the equality-constrained KKT system for a fixed active set.
fn newton_active(
    prog: &ChainProgram,
    x0: &DVector<f64>,
    lambda0: &[f64],
    active: &[usize],
) -> Result<(DVector<f64>, Vec<f64>)> {
    let d = prog.dim();
    let na = active.len();
    let mut x = x0.clone();
    let mut lam: Vec<f64> = active.iter().map(|&j| lambda0[j]).collect();

    let system = |x: &DVector<f64>, lam: &[f64]| -> Result<DVector<f64>> {
        let mut full = vec![0.0; prog.q()];
        for (&j, &l) in active.iter().zip(lam) {
            full[j] = l;
        }
        let st = lagrangian_grad(prog, x.as_slice(), &full)?;
        let g = prog.constraints(x.as_slice());
        let mut f = DVector::zeros(d + na);
        f.rows_mut(0, d).copy_from(&st);
        for (i, &j) in active.iter().enumerate() {
            f[d + i] = g[j];
        }
        Ok(f)
    };

    let mut f = system(&x, &lam)?;
    let mut fnorm = f.norm();
    let tol = 1e-14 * (1.0 + x.amax());
    let mut cg = DVector::zeros(d);
    for _ in 0..60 {
        if f.amax() <= tol {
            break;
        }
        let mut full = vec![0.0; prog.q()];
        for (&j, &l) in active.iter().zip(&lam) {
            full[j] = l;
        }
        let h = lagrangian_hess(prog, x.as_slice(), &full)?;
        let mut jac = DMatrix::zeros(d + na, d + na);
        jac.view_mut((0, 0), (d, d)).copy_from(&h);
        for (i, &j) in active.iter().enumerate() {
            prog.constraint_grad(j, x.as_slice(), &mut cg)?;
            jac.view_mut((d + i, 0), (1, d)).copy_from(&cg.transpose());
            jac.view_mut((0, d + i), (d, 1)).copy_from(&cg);
        }
        let step = jac
            .lu()
            .solve(&(-&f))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| GameError::Numerical("singular KKT matrix".into()))?;

        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let xt = &x + step.rows(0, d) * alpha;
            let lt: Vec<f64> = lam
                .iter()
                .enumerate()
                .map(|(i, l)| l + alpha * step[d + i])
                .collect();
            if let Ok(ft) = system(&xt, &lt) {
                let nt = ft.norm();
                if nt < (1.0 - 1e-4 * alpha) * fnorm || ft.amax() <= tol {
                    x = xt;
                    lam = lt;
                    f = ft;
                    fnorm = nt;
                    improved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !f.iter().all(|v| v.is_finite()) {
        return Err(GameError::Numerical("non-finite KKT residual".into()));
    }
    Ok((x, lam))
}

/// Refines an approximate KKT point to machine precision, adjusting the active
/// set when a multiplier turns negative or an inactive constraint is violated.
pub(crate) fn polish(
    prog: &ChainProgram,
    x0: &DVector<f64>,
    lambda0: &[f64],
    active0: Vec<usize>,
) -> Result<KktPoint> {
    let q = prog.q();
    let mut active = active0;
    let mut lambda = lambda0.to_vec();
    let mut x = x0.clone();
    for _ in 0..(2 * q + 2) {
        let (xn, lam) = newton_active(prog, &x, &lambda, &active)?;
        let mut full = vec![0.0; q];
        for (&j, &l) in active.iter().zip(&lam) {
            full[j] = l;
        }
        let g = prog.constraints(xn.as_slice());
        let scale = 1.0 + full.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let worst_neg = active
            .iter()
            .zip(&lam)
            .filter(|(_, l)| **l < -1e-12 * scale)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| *j);
        if let Some(j) = worst_neg {
            active.retain(|&a| a != j);
            full[j] = 0.0;
            x = xn;
            lambda = full;
            continue;
        }
        let worst_viol = (0..q)
            .filter(|j| !active.contains(j) && g[*j] > 1e-12 * (1.0 + xn.amax()))
            .max_by(|a, b| g[*a].total_cmp(&g[*b]));
        if let Some(j) = worst_viol {
            active.push(j);
            active.sort_unstable();
            x = xn;
            lambda = full;
            continue;
        }
        for l in full.iter_mut() {
            *l = l.max(0.0);
        }
        return Ok(KktPoint { x: xn, lambda: full });
    }
    Err(GameError::Numerical("active-set refinement did not settle".into()))
}

/// Initial active-set guess from approximate multipliers and constraint values.
pub(crate) fn guess_active(prog: &ChainProgram, x: &[f64], mu: &[f64]) -> Vec<usize> {
    let g = prog.constraints(x);
    (0..prog.q())
        .filter(|&j| mu[j] > 1e-10 || g[j] > -1e-7 * (1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()))))
        .collect()
}

/// Least-squares multipliers from stationarity on a given active set, clipped at zero.
pub(crate) fn estimate_multipliers(prog: &ChainProgram, x: &[f64], active: &[usize]) -> Result<Vec<f64>> {
    let d = prog.dim();
    let mut lambda = vec![0.0; prog.q()];
    if active.is_empty() {
        return Ok(lambda);
    }
    let mut grad = DVector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);
    prog.objective_derivs(x, &mut grad, &mut hess);
    let mut jt = DMatrix::zeros(d, active.len());
    let mut cg = DVector::zeros(d);
    for (i, &j) in active.iter().enumerate() {
        prog.constraint_grad(j, x, &mut cg)?;
        jt.set_column(i, &cg);
    }
    let sol = jt
        .svd(true, true)
        .solve(&(-grad), 1e-14)
        .map_err(|e| GameError::Numerical(e.to_string()))?;
    for (i, &j) in active.iter().enumerate() {
        lambda[j] = sol[i].max(0.0);
    }
    Ok(lambda)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CertTolerances {
    pub active_tol: f64,
    pub licq_tol: f64,
    pub scs_tol: f64,
    pub sosc_tol: f64,
}

pub(crate) fn active_set(prog: &ChainProgram, x: &[f64], tol: f64) -> Vec<usize> {
    prog.constraints(x)
        .iter()
        .enumerate()
        .filter(|(_, g)| g.abs() <= tol)
        .map(|(j, _)| j)
        .collect()
}

/// LICQ, strict complementarity and the second-order sufficient condition on
/// the critical cone (null space of the active constraint Jacobian).
pub(crate) fn certificates(
    prog: &ChainProgram,
    x: &[f64],
    lambda: &[f64],
    tol: &CertTolerances,
) -> Result<Certificates> {
    let d = prog.dim();
    let active = active_set(prog, x, tol.active_tol);
    let mut jac = DMatrix::zeros(active.len(), d);
    let mut cg = DVector::zeros(d);
    for (i, &j) in active.iter().enumerate() {
        prog.constraint_grad(j, x, &mut cg)?;
        jac.set_row(i, &cg.transpose());
    }

    let (licq, rank) = if active.is_empty() {
        (true, 0)
    } else {
        let sv = jac.singular_values();
        let rank = sv.iter().filter(|s| **s > tol.licq_tol).count();
        (active.len() <= d && rank == active.len(), rank)
    };
    let scs = active.iter().all(|&j| lambda[j] > tol.scs_tol);

    let hess = lagrangian_hess(prog, x, lambda)?;
    let null_dim = d - rank;
    let sosc_min_eig = if null_dim == 0 {
        None
    } else {
        let z = if active.is_empty() {
            DMatrix::identity(d, d)
        } else {
            let gram = jac.transpose() * &jac;
            let eig = gram.symmetric_eigen();
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
            let cols: Vec<DVector<f64>> = order[..null_dim]
                .iter()
                .map(|&c| eig.eigenvectors.column(c).into_owned())
                .collect();
            DMatrix::from_columns(&cols)
        };
        let reduced = z.transpose() * &hess * &z;
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        Some(reduced.symmetric_eigenvalues().min())
    };
    let sosc = sosc_min_eig.is_none_or(|e| e > tol.sosc_tol);
    Ok(Certificates {
        licq,
        scs,
        sosc,
        sosc_min_eig,
    })
}
