//! Value gradient from the optimal multipliers, and the Isaacs residual.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::CapturePlan;
use crate::error::{GameError, Result};
use crate::model::{GameConfig, GameState, KERNEL_EPS};
use crate::Point;

/// Gradient of the value with respect to every attacker position and the defender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueGradient {
    #[serde(with = "crate::serde_points")]
    pub attackers: Vec<Point>,
    #[serde(with = "crate::serde_points::single")]
    pub defender: Point,
}

impl ValueGradient {
    /// Stacked as `[x_A0, ..., x_A(m-1), x_D]`, matching [`GameState::stacked`].
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.defender.len();
        let mut out = DVector::zeros(n * (self.attackers.len() + 1));
        for (i, a) in self.attackers.iter().chain(std::iter::once(&self.defender)).enumerate() {
            out.rows_mut(i * n, n).copy_from(a);
        }
        out
    }

    pub fn from_stacked(x: &DVector<f64>, n: usize) -> Self {
        let m = x.len() / n - 1;
        Self {
            attackers: (0..m).map(|i| x.rows(i * n, n).into_owned()).collect(),
            defender: x.rows(m * n, n).into_owned(),
        }
    }
}

fn unit(v: Point, what: &str) -> Result<Point> {
    let r = v.norm();
    if r < KERNEL_EPS {
        return Err(GameError::DegeneratePoint(what.to_string()));
    }
    Ok(v / r)
}

/// Gradient of the value at `state` from a certified plan: attacker `j` gets
/// `-(lambda_j / nu_j) (p_j - x_Aj) / |p_j - x_Aj|`, the defender
/// `(sum lambda) (p_phase - x_D) / |p_phase - x_D|`; captured attackers get zero.
pub fn value_gradient(plan: &CapturePlan, state: &GameState, cfg: &GameConfig) -> Result<ValueGradient> {
    if !plan.certificates.all() {
        return Err(GameError::UncertifiedPlan);
    }
    let m = cfg.m();
    if plan.phase >= m || plan.points.len() != m - plan.phase || plan.multipliers.len() != plan.points.len() {
        return Err(GameError::DimensionMismatch {
            expected: m.saturating_sub(plan.phase),
            found: plan.points.len(),
        });
    }
    state.check(cfg)?;
    let n = cfg.n;
    let mut attackers = vec![Point::zeros(n); m];
    for (k, (p, &l)) in plan.points.iter().zip(&plan.multipliers).enumerate() {
        let j = plan.phase + k;
        if l != 0.0 {
            let u = unit(p - &state.attackers[j], &format!("capture point {j} at its attacker"))?;
            attackers[j] = u * (-l / cfg.speeds[j]);
        }
    }
    let total: f64 = plan.multipliers.iter().sum();
    let defender = if total != 0.0 {
        unit(&plan.points[0] - &state.defender, "first capture point at the defender")? * total
    } else {
        Point::zeros(n)
    };
    Ok(ValueGradient { attackers, defender })
}

/// `|grad_D| - sum_i nu_i |grad_Ai|`; zero along solutions of the Isaacs equation.
pub fn isaacs_residual(grad: &ValueGradient, cfg: &GameConfig) -> f64 {
    grad.defender.norm()
        - grad
            .attackers
            .iter()
            .zip(&cfg.speeds)
            .map(|(g, nu)| nu * g.norm())
            .sum::<f64>()
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
    fn single_attacker_gradient() {
        let (state, cfg) = instance();
        let plan = solve_single(&state, &cfg).unwrap();
        let g = value_gradient(&plan, &state, &cfg).unwrap();
        let lam = plan.multipliers[0];
        let dir = &g.defender / g.defender.norm();
        assert_abs_diff_eq!(dir[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dir[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.defender.norm(), lam, epsilon = 1e-14);
        assert_abs_diff_eq!(g.attackers[0].norm(), lam / 0.5, epsilon = 1e-14);
        assert!(isaacs_residual(&g, &cfg).abs() <= 1e-10);
    }

    #[test]
    fn doubled_attacker_block_breaks_isaacs() {
        let (state, cfg) = instance();
        let plan = solve_single(&state, &cfg).unwrap();
        let mut g = value_gradient(&plan, &state, &cfg).unwrap();
        g.attackers[0] *= 2.0;
        assert!(isaacs_residual(&g, &cfg) < -1e-3);
    }

    #[test]
    fn uncertified_plan_rejected() {
        let (state, cfg) = instance();
        let mut plan = solve_single(&state, &cfg).unwrap();
        plan.certificates.scs = false;
        assert!(matches!(
            value_gradient(&plan, &state, &cfg),
            Err(GameError::UncertifiedPlan)
        ));
    }

    #[test]
    fn stacked_roundtrip() {
        let g = ValueGradient {
            attackers: vec![point(&[1.0, 2.0]), point(&[3.0, 4.0])],
            defender: point(&[5.0, 6.0]),
        };
        assert_eq!(ValueGradient::from_stacked(&g.stacked(), 2), g);
    }
}
