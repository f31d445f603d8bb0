//! Game instances, states, and the pieces of the capture-point program:
//! the weighted proximity objective and the reachability constraints.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::geometry::ProximityShape;
use crate::Point;

/// Norm kernels below this are treated as zero (gradient undefined).
pub const KERNEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub kkt_tol: f64,
    pub value_gap_tol: f64,
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-8,
            value_gap_tol: 1e-6,
            fd_step: 1e-5,
        }
    }
}

/// One game instance: the attackers' speed ratios and weights, the target, and
/// the numerical tolerances used throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n: usize,
    pub speeds: Vec<f64>,
    pub weights: Vec<f64>,
    pub target: ProximityShape,
    pub capture_radius: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl GameConfig {
    /// Builds a config and validates it.
    pub fn new(speeds: Vec<f64>, weights: Vec<f64>, target: ProximityShape) -> Result<Self> {
        let cfg = GameConfig {
            n: target.dim(),
            speeds,
            weights,
            target,
            capture_radius: 1e-3,
            tolerances: Tolerances::default(),
        };
        validate_config(&cfg)?;
        Ok(cfg)
    }

    /// Number of attackers.
    pub fn m(&self) -> usize {
        self.speeds.len()
    }

    pub fn with_capture_radius(mut self, eps: f64) -> Self {
        self.capture_radius = eps;
        self
    }

    /// All invariant violations, empty when the config is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n < 1 {
            out.push("dimension n must be at least 1".to_string());
        }
        if self.speeds.is_empty() {
            out.push("at least one attacker required".to_string());
        }
        if self.weights.len() != self.speeds.len() {
            out.push(format!(
                "{} weights given for {} attackers",
                self.weights.len(),
                self.speeds.len()
            ));
        }
        for (i, nu) in self.speeds.iter().enumerate() {
            if !(*nu > 0.0 && *nu < 1.0) {
                out.push(format!("speed ratio not in (0,1): attacker {} has {nu}", i + 1));
            }
        }
        for (i, w) in self.weights.iter().enumerate() {
            if !(*w > 0.0) {
                out.push(format!("weight not positive: attacker {} has {w}", i + 1));
            }
        }
        let total: f64 = self.weights.iter().sum();
        if !self.weights.is_empty() && (total - 1.0).abs() > 1e-12 {
            out.push(format!("weights sum ≠ 1 (sum is {total})"));
        }
        if !(self.capture_radius > 0.0) {
            out.push(format!("capture radius must be positive, got {}", self.capture_radius));
        }
        if self.target.dim() != self.n {
            out.push(format!(
                "target dimension {} does not match n = {}",
                self.target.dim(),
                self.n
            ));
        }
        if let Err(e) = self.target.validate() {
            out.push(e.to_string());
        }
        let t = &self.tolerances;
        if !(t.kkt_tol > 0.0 && t.value_gap_tol > 0.0 && t.fd_step > 0.0) {
            out.push("tolerances must be positive".to_string());
        }
        out
    }
}

/// Enforces the config invariants, reporting every violation at once.
pub fn validate_config(cfg: &GameConfig) -> Result<()> {
    let v = cfg.violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(GameError::InvalidConfig(v))
    }
}

/// Positions of all agents plus the index of the first uncaptured attacker.
///
/// `phase` is zero-based: phase 0 is the opening phase in which attacker 0 is
/// the defender's current quarry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    #[serde(with = "crate::serde_points")]
    pub attackers: Vec<Point>,
    #[serde(with = "crate::serde_points::single")]
    pub defender: Point,
    #[serde(default)]
    pub phase: usize,
}

impl GameState {
    pub fn new(attackers: Vec<Point>, defender: Point) -> Self {
        Self {
            attackers,
            defender,
            phase: 0,
        }
    }

    pub fn check(&self, cfg: &GameConfig) -> Result<()> {
        if self.attackers.len() != cfg.m() {
            return Err(GameError::DimensionMismatch {
                expected: cfg.m(),
                found: self.attackers.len(),
            });
        }
        for p in self.attackers.iter().chain(std::iter::once(&self.defender)) {
            if p.len() != cfg.n {
                return Err(GameError::DimensionMismatch {
                    expected: cfg.n,
                    found: p.len(),
                });
            }
        }
        if self.phase >= cfg.m() {
            return Err(GameError::IndexOutOfRange {
                index: self.phase,
                lo: 0,
                hi: cfg.m() - 1,
            });
        }
        Ok(())
    }

    /// Stacked position vector `[x_A1, ..., x_Am, x_D]`.
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.defender.len();
        let mut out = DVector::zeros(n * (self.attackers.len() + 1));
        for (i, p) in self.attackers.iter().chain(std::iter::once(&self.defender)).enumerate() {
            out.rows_mut(i * n, n).copy_from(p);
        }
        out
    }

    /// Inverse of [`GameState::stacked`].
    pub fn from_stacked(x: &DVector<f64>, n: usize, phase: usize) -> Self {
        let count = x.len() / n;
        let mut pts: Vec<Point> = (0..count).map(|i| x.rows(i * n, n).into_owned()).collect();
        let defender = pts.pop().expect("at least the defender");
        Self {
            attackers: pts,
            defender,
            phase,
        }
    }
}

/// Weighted proximity `sum_{j >= phase} theta_j h(p_j)`; entries before `phase` are ignored.
pub fn objective_f(points: &[Point], cfg: &GameConfig, phase: usize) -> Result<f64> {
    if points.len() != cfg.m() {
        return Err(GameError::DimensionMismatch {
            expected: cfg.m(),
            found: points.len(),
        });
    }
    let mut total = 0.0;
    for (w, p) in cfg.weights.iter().zip(points).skip(phase) {
        total += w * cfg.target.value(p)?;
    }
    Ok(total)
}

fn check_constraint_args(
    j: usize,
    points: &[Point],
    state: &GameState,
    cfg: &GameConfig,
    phase: usize,
) -> Result<()> {
    let m = cfg.m();
    if phase >= m || j < phase || j >= m {
        return Err(GameError::IndexOutOfRange {
            index: j,
            lo: phase,
            hi: m.saturating_sub(1),
        });
    }
    if points.len() != m || state.attackers.len() != m {
        return Err(GameError::DimensionMismatch {
            expected: m,
            found: points.len().min(state.attackers.len()),
        });
    }
    for p in points[phase..]
        .iter()
        .chain(&state.attackers)
        .chain(std::iter::once(&state.defender))
    {
        if p.len() != cfg.n {
            return Err(GameError::DimensionMismatch {
                expected: cfg.n,
                found: p.len(),
            });
        }
    }
    Ok(())
}

/// Time-to-reach difference for attacker `j`: its own travel time to `p_j`
/// minus the defender's time along `x_D -> p_phase -> ... -> p_j`.
/// The plan is feasible for `j` when this is `<= 0`.
pub fn constraint_g(
    j: usize,
    points: &[Point],
    state: &GameState,
    cfg: &GameConfig,
    phase: usize,
) -> Result<f64> {
    check_constraint_args(j, points, state, cfg, phase)?;
    let own = (&points[j] - &state.attackers[j]).norm() / cfg.speeds[j];
    let mut path = 0.0;
    let mut prev = &state.defender;
    for p in &points[phase..=j] {
        path += (p - prev).norm();
        prev = p;
    }
    Ok(own - path)
}

/// Gradients of `g_j` with respect to the capture points and the state.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintGradients {
    /// `d g_j / d p_k` for `k = phase..m`.
    pub wrt_points: Vec<Point>,
    /// `d g_j / d x_Ak` for every attacker (zero except `k = j`).
    pub wrt_attackers: Vec<Point>,
    pub wrt_defender: Point,
}

pub fn constraint_gradients(
    j: usize,
    points: &[Point],
    state: &GameState,
    cfg: &GameConfig,
    phase: usize,
) -> Result<ConstraintGradients> {
    check_constraint_args(j, points, state, cfg, phase)?;
    let n = cfg.n;
    let m = cfg.m();
    let unit = |v: Point, what: &str| -> Result<Point> {
        let norm = v.norm();
        if norm < KERNEL_EPS {
            return Err(GameError::DegeneratePoint(what.to_string()));
        }
        Ok(v / norm)
    };

    let mut wrt_points = vec![DVector::zeros(n); m - phase];
    let own = unit(&points[j] - &state.attackers[j], "capture point equals attacker position")?;
    wrt_points[j - phase] += &own / cfg.speeds[j];

    let mut prev = &state.defender;
    let mut first_seg = None;
    for k in phase..=j {
        let seg = unit(&points[k] - prev, "consecutive capture points coincide")?;
        wrt_points[k - phase] -= &seg;
        if k > phase {
            wrt_points[k - 1 - phase] += &seg;
        } else {
            first_seg = Some(seg);
        }
        prev = &points[k];
    }

    let mut wrt_attackers = vec![DVector::zeros(n); m];
    wrt_attackers[j] = -own / cfg.speeds[j];
    Ok(ConstraintGradients {
        wrt_points,
        wrt_attackers,
        wrt_defender: first_seg.expect("loop runs at least once"),
    })
}
