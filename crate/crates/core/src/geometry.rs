//! Convex target areas described by a twice-differentiable proximity function.
//!
//! The target is the sublevel set `T = { x : h(x) <= 0 }`. Positive values of
//! `h` measure how far a point is from the target, negative values how deep
//! inside it lies.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::Point;

/// Convex proximity function with exact first and second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ProximityShape {
    /// `h(x) = |x - center|^2 - radius^2`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `h(x) = (x - center)^T Q (x - center) - level`, `Q` symmetric positive definite.
    Ellipsoid {
        center: Vec<f64>,
        shape_matrix: Vec<Vec<f64>>,
        level: f64,
    },
    /// `h(x) = normal . x - offset` with a unit normal.
    HalfSpace { normal: Vec<f64>, offset: f64 },
}

impl ProximityShape {
    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        let shape = ProximityShape::Ball {
            center: center.to_vec(),
            radius,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn ellipsoid(center: &[f64], shape_matrix: Vec<Vec<f64>>, level: f64) -> Result<Self> {
        let shape = ProximityShape::Ellipsoid {
            center: center.to_vec(),
            shape_matrix,
            level,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn half_space(normal: &[f64], offset: f64) -> Result<Self> {
        let shape = ProximityShape::HalfSpace {
            normal: normal.to_vec(),
            offset,
        };
        shape.validate()?;
        Ok(shape)
    }

    /// Space dimension the shape lives in.
    pub fn dim(&self) -> usize {
        match self {
            ProximityShape::Ball { center, .. } | ProximityShape::Ellipsoid { center, .. } => {
                center.len()
            }
            ProximityShape::HalfSpace { normal, .. } => normal.len(),
        }
    }

    /// Checks the parameter invariants (positive radius, SPD shape matrix, unit normal).
    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(GameError::InvalidShape("dimension must be at least 1".into()));
        }
        match self {
            ProximityShape::Ball { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(GameError::InvalidShape(format!(
                        "ball radius must be positive, got {radius}"
                    )));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(GameError::InvalidShape("non-finite ball center".into()));
                }
            }
            ProximityShape::Ellipsoid {
                center,
                shape_matrix,
                level,
            } => {
                let n = center.len();
                if shape_matrix.len() != n || shape_matrix.iter().any(|row| row.len() != n) {
                    return Err(GameError::InvalidShape(format!(
                        "shape matrix must be {n}x{n}"
                    )));
                }
                if !level.is_finite() {
                    return Err(GameError::InvalidShape("non-finite ellipsoid level".into()));
                }
                let q = DMatrix::from_fn(n, n, |i, j| shape_matrix[i][j]);
                let asym = (&q - q.transpose()).amax();
                if asym > 1e-12 * q.amax().max(1.0) {
                    return Err(GameError::InvalidShape("shape matrix is not symmetric".into()));
                }
                let min_eig = q.symmetric_eigenvalues().min();
                if !(min_eig > 0.0) {
                    return Err(GameError::InvalidShape(format!(
                        "shape matrix must be positive definite (min eigenvalue {min_eig})"
                    )));
                }
            }
            ProximityShape::HalfSpace { normal, offset } => {
                let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(GameError::InvalidShape(format!(
                        "half-space normal must have unit norm, got {norm}"
                    )));
                }
                if !offset.is_finite() {
                    return Err(GameError::InvalidShape("non-finite half-space offset".into()));
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(GameError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `h(x)`.
    pub fn value(&self, x: &Point) -> Result<f64> {
        self.check_dim(x.as_slice())?;
        Ok(self.value_unchecked(x.as_slice()))
    }

    /// Exact gradient of `h`.
    pub fn gradient(&self, x: &Point) -> Result<DVector<f64>> {
        self.check_dim(x.as_slice())?;
        let mut g = DVector::zeros(self.dim());
        self.gradient_into(x.as_slice(), g.as_mut_slice());
        Ok(g)
    }

    /// Exact Hessian of `h`.
    pub fn hessian(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.check_dim(x.as_slice())?;
        Ok(self.hessian_unchecked())
    }

    /// Whether `x` lies in the (closed) target area.
    pub fn contains(&self, x: &Point) -> Result<bool> {
        Ok(self.value(x)? <= 0.0)
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            ProximityShape::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 - radius * radius
            }
            ProximityShape::Ellipsoid {
                center,
                shape_matrix,
                level,
            } => {
                let mut acc = 0.0;
                for (i, row) in shape_matrix.iter().enumerate() {
                    let di = x[i] - center[i];
                    for (j, q) in row.iter().enumerate() {
                        acc += di * q * (x[j] - center[j]);
                    }
                }
                acc - level
            }
            ProximityShape::HalfSpace { normal, offset } => {
                x.iter().zip(normal).map(|(a, n)| a * n).sum::<f64>() - offset
            }
        }
    }

    pub(crate) fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ProximityShape::Ball { center, .. } => {
                for ((o, a), c) in out.iter_mut().zip(x).zip(center) {
                    *o = 2.0 * (a - c);
                }
            }
            ProximityShape::Ellipsoid {
                center,
                shape_matrix,
                ..
            } => {
                for (i, row) in shape_matrix.iter().enumerate() {
                    out[i] = 2.0
                        * row
                            .iter()
                            .enumerate()
                            .map(|(j, q)| q * (x[j] - center[j]))
                            .sum::<f64>();
                }
            }
            ProximityShape::HalfSpace { normal, .. } => out.copy_from_slice(normal),
        }
    }

    pub(crate) fn hessian_unchecked(&self) -> DMatrix<f64> {
        let n = self.dim();
        match self {
            ProximityShape::Ball { .. } => DMatrix::identity(n, n) * 2.0,
            ProximityShape::Ellipsoid { shape_matrix, .. } => {
                DMatrix::from_fn(n, n, |i, j| 2.0 * shape_matrix[i][j])
            }
            ProximityShape::HalfSpace { .. } => DMatrix::zeros(n, n),
        }
    }

    /// Largest distance from the shape's reference point at which `h <= 0` can hold,
    /// when the target is bounded. Used to sanity-check spawn radii.
    pub fn extent(&self) -> Option<f64> {
        match self {
            ProximityShape::Ball { center, radius } => {
                Some(center.iter().map(|c| c * c).sum::<f64>().sqrt() + radius)
            }
            ProximityShape::Ellipsoid {
                center,
                shape_matrix,
                level,
            } => {
                let n = center.len();
                let q = DMatrix::from_fn(n, n, |i, j| shape_matrix[i][j]);
                let min_eig = q.symmetric_eigenvalues().min();
                let semi = if *level > 0.0 { (level / min_eig).sqrt() } else { 0.0 };
                Some(center.iter().map(|c| c * c).sum::<f64>().sqrt() + semi)
            }
            ProximityShape::HalfSpace { .. } => None,
        }
    }
}
