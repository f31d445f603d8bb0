//! Augmented-Lagrangian Newton method for small smooth convex programs
//! `min f(x) s.t. c_j(x) <= 0`.
//!
//! Inequalities use the Powell-Hestenes-Rockafellar shifted penalty; each
//! inner problem is minimized by a damped Newton method on the generalized
//! Hessian with Armijo backtracking.

use nalgebra::{DMatrix, DVector};

pub(crate) trait ConvexProblem {
    fn dim(&self) -> usize;
    fn n_constraints(&self) -> usize;
    fn objective(&self, x: &DVector<f64>) -> f64;
    /// Sets `grad` and `hess`.
    fn objective_derivs(&self, x: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>);
    fn constraint(&self, j: usize, x: &DVector<f64>) -> f64;
    /// Sets `grad` and `hess`.
    fn constraint_derivs(
        &self,
        j: usize,
        x: &DVector<f64>,
        grad: &mut DVector<f64>,
        hess: &mut DMatrix<f64>,
    );
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AlOptions {
    pub feas_tol: f64,
    pub grad_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub rho0: f64,
    pub rho_max: f64,
}

impl Default for AlOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-11,
            grad_tol: 1e-10,
            max_outer: 60,
            max_inner: 100,
            rho0: 10.0,
            rho_max: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AlOutcome {
    pub x: DVector<f64>,
    pub mu: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub converged: bool,
}

struct Penalized<'p, P: ConvexProblem> {
    prob: &'p P,
    mu: &'p [f64],
    rho: f64,
}

impl<P: ConvexProblem> Penalized<'_, P> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.prob.objective(x);
        for (j, &mu) in self.mu.iter().enumerate() {
            let s = (mu + self.rho * self.prob.constraint(j, x)).max(0.0);
            v += (s * s - mu * mu) / (2.0 * self.rho);
        }
        v
    }

    fn derivs(
        &self,
        x: &DVector<f64>,
        grad: &mut DVector<f64>,
        hess: &mut DMatrix<f64>,
        cg: &mut DVector<f64>,
        ch: &mut DMatrix<f64>,
    ) {
        self.prob.objective_derivs(x, grad, hess);
        for (j, &mu) in self.mu.iter().enumerate() {
            let s = mu + self.rho * self.prob.constraint(j, x);
            if s > 0.0 {
                self.prob.constraint_derivs(j, x, cg, ch);
                grad.axpy(s, cg, 1.0);
                *hess += &*ch * s;
                hess.ger(self.rho, cg, cg, 1.0);
            }
        }
    }
}

/// Damped Newton minimization of the penalized function. Returns the final gradient norm.
fn newton_inner<P: ConvexProblem>(pen: &Penalized<'_, P>, x: &mut DVector<f64>, opts: &AlOptions) -> f64 {
    let d = x.len();
    let mut grad = DVector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);
    let mut cg = DVector::zeros(d);
    let mut ch = DMatrix::zeros(d, d);
    let mut value = pen.value(x);
    let mut gnorm = f64::INFINITY;
    for _ in 0..opts.max_inner {
        pen.derivs(x, &mut grad, &mut hess, &mut cg, &mut ch);
        gnorm = grad.amax();
        if gnorm <= opts.grad_tol {
            break;
        }
        let scale = hess.diagonal().amax().max(1.0);
        let mut tau = 0.0;
        let step = loop {
            let mut reg = hess.clone();
            if tau > 0.0 {
                for i in 0..d {
                    reg[(i, i)] += tau;
                }
            }
            if let Some(chol) = reg.cholesky() {
                let s = chol.solve(&(-&grad));
                if s.iter().all(|v| v.is_finite()) {
                    break Some(s);
                }
            }
            tau = if tau == 0.0 { 1e-12 * scale } else { tau * 10.0 };
            if tau > 1e12 * scale {
                break None;
            }
        };
        let Some(step) = step else { break };
        let slope = grad.dot(&step);
        if slope >= 0.0 {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &*x + &step * alpha;
            let tv = pen.value(&trial);
            // Close to the minimizer the decrease drowns in rounding; take
            // the full Newton step there.
            let flat = alpha == 1.0 && tv - value <= 1e-14 * (1.0 + value.abs());
            if tv <= value + 1e-4 * alpha * slope || flat {
                *x = trial;
                value = tv;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    gnorm
}

pub(crate) fn al_solve<P: ConvexProblem>(
    prob: &P,
    x0: DVector<f64>,
    mu0: Option<&[f64]>,
    opts: &AlOptions,
) -> AlOutcome {
    debug_assert_eq!(x0.len(), prob.dim());
    let m = prob.n_constraints();
    let mut x = x0;
    let mut mu: Vec<f64> = match mu0 {
        Some(m0) if m0.len() == m => m0.iter().map(|v| v.max(0.0)).collect(),
        _ => vec![0.0; m],
    };
    let mut rho = opts.rho0;
    let mut prev_infeas = f64::INFINITY;
    for _ in 0..opts.max_outer {
        let gnorm = {
            let pen = Penalized {
                prob,
                mu: &mu,
                rho,
            };
            newton_inner(&pen, &mut x, opts)
        };
        let c: Vec<f64> = (0..m).map(|j| prob.constraint(j, &x)).collect();
        let infeas = c
            .iter()
            .zip(&mu)
            .map(|(cj, mj)| (-cj).min(mj / rho).abs())
            .fold(0.0, f64::max);
        for (mj, cj) in mu.iter_mut().zip(&c) {
            *mj = (*mj + rho * cj).max(0.0);
        }
        let violation = c.iter().fold(0.0f64, |a, &v| a.max(v));
        let slack = c
            .iter()
            .zip(&mu)
            .map(|(cj, mj)| (cj * mj).abs())
            .fold(0.0, f64::max);
        if violation <= opts.feas_tol && slack <= opts.feas_tol && gnorm <= opts.grad_tol * 10.0 {
            return AlOutcome {
                x,
                mu,
                converged: true,
            };
        }
        if infeas > 0.25 * prev_infeas {
            rho = (rho * 10.0).min(opts.rho_max);
        }
        prev_infeas = infeas;
    }
    AlOutcome {
        x,
        mu,
        converged: false,
    }
}
