//! Flat evaluation of the capture-point program for one phase.
//!
//! Free variables are the stacked capture points `x = [p_0, ..., p_{q-1}]`
//! (relative to the phase). Constraint `j` reads
//!
//! ```text
//! g_j(x) = |p_j - a_j| / nu_j - head_start - sum_{k<=j} |p_k - p_{k-1}|,   p_{-1} = base
//! ```
//!
//! The cooperative program uses `base = x_D` and `head_start = 0`; a
//! noncooperative baseline stage uses the previous capture point and the
//! defender's accumulated path length.

use nalgebra::{DMatrix, DVector};

use crate::error::{GameError, Result};
use crate::geometry::ProximityShape;
use crate::model::{GameConfig, GameState, KERNEL_EPS};
use crate::Point;

#[derive(Debug, Clone)]
pub(crate) struct ChainProgram<'a> {
    pub n: usize,
    pub target: &'a ProximityShape,
    pub weights: Vec<f64>,
    pub anchors: Vec<Point>,
    pub speeds: Vec<f64>,
    pub base: Point,
    pub head_start: f64,
}

impl<'a> ChainProgram<'a> {
    pub fn for_phase(state: &GameState, cfg: &'a GameConfig, phase: usize) -> Self {
        Self {
            n: cfg.n,
            target: &cfg.target,
            weights: cfg.weights[phase..].to_vec(),
            anchors: state.attackers[phase..].to_vec(),
            speeds: cfg.speeds[phase..].to_vec(),
            base: state.defender.clone(),
            head_start: 0.0,
        }
    }

    pub fn q(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.q() * self.n
    }

    #[inline]
    pub fn pt<'x>(&self, x: &'x [f64], k: usize) -> &'x [f64] {
        &x[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn prev<'x>(&'x self, x: &'x [f64], k: usize) -> &'x [f64] {
        if k == 0 {
            self.base.as_slice()
        } else {
            self.pt(x, k - 1)
        }
    }

    pub fn stack(points: &[Point]) -> DVector<f64> {
        let n = points.first().map_or(0, |p| p.len());
        let mut x = DVector::zeros(n * points.len());
        for (k, p) in points.iter().enumerate() {
            x.rows_mut(k * n, n).copy_from(p);
        }
        x
    }

    pub fn unstack(&self, x: &DVector<f64>) -> Vec<Point> {
        (0..self.q())
            .map(|k| x.rows(k * self.n, self.n).into_owned())
            .collect()
    }

    /// Attacker positions stacked: always a feasible point.
    pub fn anchor_stack(&self) -> DVector<f64> {
        Self::stack(&self.anchors)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        (0..self.q())
            .map(|k| self.weights[k] * self.target.value_unchecked(self.pt(x, k)))
            .sum()
    }

    /// Sets `grad` and `hess` to the objective derivatives.
    pub fn objective_derivs(&self, x: &[f64], grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        let n = self.n;
        hess.fill(0.0);
        let block = self.target.hessian_unchecked();
        for k in 0..self.q() {
            let w = self.weights[k];
            let g = &mut grad.as_mut_slice()[k * n..(k + 1) * n];
            self.target.gradient_into(self.pt(x, k), g);
            g.iter_mut().for_each(|v| *v *= w);
            hess.view_mut((k * n, k * n), (n, n)).copy_from(&(&block * w));
        }
    }

    pub fn segment(&self, x: &[f64], k: usize) -> DVector<f64> {
        let a = self.pt(x, k);
        let b = self.prev(x, k);
        DVector::from_iterator(self.n, a.iter().zip(b).map(|(u, v)| u - v))
    }

    pub fn own(&self, x: &[f64], j: usize) -> DVector<f64> {
        let a = self.pt(x, j);
        DVector::from_iterator(
            self.n,
            a.iter().zip(self.anchors[j].iter()).map(|(u, v)| u - v),
        )
    }

    /// Exact constraint values.
    pub fn constraints(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.q());
        let mut path = self.head_start;
        for j in 0..self.q() {
            path += self.segment(x, j).norm();
            out.push(self.own(x, j).norm() / self.speeds[j] - path);
        }
        out
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints(x).into_iter().fold(0.0, f64::max)
    }

    fn unit(v: DVector<f64>, what: &str) -> Result<(DVector<f64>, f64)> {
        let norm = v.norm();
        if norm < KERNEL_EPS {
            return Err(GameError::DegeneratePoint(what.to_string()));
        }
        Ok((v / norm, norm))
    }

    /// Exact gradient of `g_j` with respect to the stacked points.
    pub fn constraint_grad(&self, j: usize, x: &[f64], out: &mut DVector<f64>) -> Result<()> {
        let n = self.n;
        out.fill(0.0);
        let (own, _) = Self::unit(self.own(x, j), "capture point equals attacker position")?;
        out.rows_mut(j * n, n).axpy(1.0 / self.speeds[j], &own, 1.0);
        for k in 0..=j {
            let (s, _) = Self::unit(self.segment(x, k), "consecutive capture points coincide")?;
            out.rows_mut(k * n, n).axpy(-1.0, &s, 1.0);
            if k > 0 {
                out.rows_mut((k - 1) * n, n).axpy(1.0, &s, 1.0);
            }
        }
        Ok(())
    }

    /// Adds `scale * hess g_j` into `out`.
    pub fn constraint_hess_add(
        &self,
        j: usize,
        x: &[f64],
        scale: f64,
        out: &mut DMatrix<f64>,
    ) -> Result<()> {
        let n = self.n;
        let eye = DMatrix::<f64>::identity(n, n);
        let (own, r) = Self::unit(self.own(x, j), "capture point equals attacker position")?;
        let block = (&eye - &own * own.transpose()) * (scale / (self.speeds[j] * r));
        out.view_mut((j * n, j * n), (n, n)).add_assign(&block);
        for k in 0..=j {
            let (s, r) = Self::unit(self.segment(x, k), "consecutive capture points coincide")?;
            let nk = (&eye - &s * s.transpose()) * (scale / r);
            out.view_mut((k * n, k * n), (n, n)).sub_assign(&nk);
            if k > 0 {
                out.view_mut(((k - 1) * n, (k - 1) * n), (n, n)).sub_assign(&nk);
                out.view_mut((k * n, (k - 1) * n), (n, n)).add_assign(&nk);
                out.view_mut(((k - 1) * n, k * n), (n, n)).add_assign(&nk);
            }
        }
        Ok(())
    }
}

use std::ops::{AddAssign, SubAssign};
