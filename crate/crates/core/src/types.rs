//! Shared value types: scan indices, planar positions, 2×2 covariances and
//! measurement frames.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scan number. The sampling period is one second, so a scan index doubles
/// as the continuous time abscissa of the trajectory polynomials.
pub type ScanIndex = u32;

/// Relative tolerance of the symmetry check applied before inverting a covariance.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Condition number above which a matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position2 {
    pub x: f64,
    pub y: f64,
}

impl Position2 {
    pub const ORIGIN: Position2 = Position2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn distance(self, other: Position2) -> f64 {
        (self - other).norm()
    }

    pub fn distance_sq(self, other: Position2) -> f64 {
        (self - other).norm_sq()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn component(self, dim: usize) -> f64 {
        match dim {
            0 => self.x,
            1 => self.y,
            _ => panic!("position has two components, got index {dim}"),
        }
    }
}

impl Add for Position2 {
    type Output = Position2;
    fn add(self, rhs: Position2) -> Position2 {
        Position2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Position2 {
    type Output = Position2;
    fn sub(self, rhs: Position2) -> Position2 {
        Position2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Position2 {
    type Output = Position2;
    fn mul(self, s: f64) -> Position2 {
        Position2::new(self.x * s, self.y * s)
    }
}

/// 2×2 covariance matrix in m², stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cov2(pub [[f64; 2]; 2]);

impl Cov2 {
    pub const fn from_rows(m: [[f64; 2]; 2]) -> Self {
        Self(m)
    }

    pub const fn diag(xx: f64, yy: f64) -> Self {
        Self([[xx, 0.0], [0.0, yy]])
    }

    pub const fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub fn xx(&self) -> f64 {
        self.0[0][0]
    }

    pub fn yy(&self) -> f64 {
        self.0[1][1]
    }

    pub fn xy(&self) -> f64 {
        self.0[0][1]
    }

    /// Variance along one axis (0 = x, 1 = y).
    pub fn variance(&self, dim: usize) -> f64 {
        self.0[dim][dim]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scaled(&self, s: f64) -> Cov2 {
        let m = self.0;
        Cov2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// Element-wise mean of two covariances.
    pub fn average(&self, other: &Cov2) -> Cov2 {
        let (a, b) = (self.0, other.0);
        Cov2([
            [0.5 * (a[0][0] + b[0][0]), 0.5 * (a[0][1] + b[0][1])],
            [0.5 * (a[1][0] + b[1][0]), 0.5 * (a[1][1] + b[1][1])],
        ])
    }

    fn inf_norm(&self) -> f64 {
        let m = self.0;
        (m[0][0].abs() + m[0][1].abs()).max(m[1][0].abs() + m[1][1].abs())
    }

    pub fn is_symmetric(&self) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= SYMMETRY_TOL * self.inf_norm()
    }

    /// Eigenvalues in ascending order (symmetric part only).
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.0[0][0];
        let d = self.0[1][1];
        let b = 0.5 * (self.0[0][1] + self.0[1][0]);
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - radius, mean + radius)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().1
    }

    /// Inverse of a symmetric positive definite covariance.
    pub fn inverse(&self) -> Result<Cov2> {
        if !self.is_symmetric() {
            return Err(Error::Asymmetric);
        }
        let (lo, hi) = self.eigenvalues();
        if !(lo > 0.0) || !(hi / lo <= MAX_CONDITION) {
            let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            return Err(Error::Singular { condition });
        }
        let det = self.det();
        let m = self.0;
        Ok(Cov2([
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ]))
    }

    /// Quadratic form vᵀ M v.
    pub fn quad_form(&self, v: Position2) -> f64 {
        let m = self.0;
        v.x * (m[0][0] * v.x + m[0][1] * v.y) + v.y * (m[1][0] * v.x + m[1][1] * v.y)
    }

    /// R · M · Rᵀ for the rotation R by `angle`.
    pub fn rotated(&self, angle: f64) -> Cov2 {
        let (s, c) = angle.sin_cos();
        let r = [[c, -s], [s, c]];
        let m = self.0;
        let mut rm = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                rm[i][j] = r[i][0] * m[0][j] + r[i][1] * m[1][j];
            }
        }
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = rm[i][0] * r[j][0] + rm[i][1] * r[j][1];
            }
        }
        Cov2(out)
    }
}

/// Squared Mahalanobis distance (a−b)ᵀ Σ⁻¹ (a−b).
pub fn mahalanobis_sq(a: Position2, b: Position2, sigma: &Cov2) -> Result<f64> {
    let inv = sigma.inverse()?;
    Ok(inv.quad_form(a - b).max(0.0))
}

/// A single position measurement with its noise covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub pos: Position2,
    pub cov: Cov2,
}

impl Measurement {
    pub const fn new(pos: Position2, cov: Cov2) -> Self {
        Self { pos, cov }
    }
}

/// Everything received at one scan. Target-originated points and clutter are
/// indistinguishable; the list may be empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementFrame {
    pub k: ScanIndex,
    pub points: Vec<Measurement>,
}

impl MeasurementFrame {
    pub fn new(k: ScanIndex, points: Vec<Measurement>) -> Self {
        Self { k, points }
    }

    pub fn empty(k: ScanIndex) -> Self {
        Self { k, points: Vec::new() }
    }

    /// Frame whose points all share one covariance.
    pub fn with_shared_cov(k: ScanIndex, points: &[Position2], cov: Cov2) -> Self {
        Self {
            k,
            points: points.iter().map(|&p| Measurement::new(p, cov)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mahalanobis_identity_is_euclidean() {
        let d = mahalanobis_sq(Position2::new(0.0, 0.0), Position2::new(3.0, 4.0), &Cov2::identity()).unwrap();
        assert_eq!(d, 25.0);
    }

    #[test]
    fn mahalanobis_coincident_points() {
        let sigma = Cov2::from_rows([[4.0, 1.0], [1.0, 3.0]]);
        let p = Position2::new(7.5, -2.0);
        assert_eq!(mahalanobis_sq(p, p, &sigma).unwrap(), 0.0);
    }

    #[test]
    fn mahalanobis_diagonal_scaling() {
        let d = mahalanobis_sq(Position2::new(2.0, 0.0), Position2::ORIGIN, &Cov2::diag(4.0, 4.0)).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mahalanobis_scales_inversely_with_covariance() {
        let sigma = Cov2::from_rows([[5.0, 2.0], [2.0, 3.0]]);
        let a = Position2::new(1.3, -0.4);
        let b = Position2::new(-2.0, 0.9);
        let d1 = mahalanobis_sq(a, b, &sigma).unwrap();
        let d2 = mahalanobis_sq(a, b, &sigma.scaled(4.0)).unwrap();
        assert!((d1 / 4.0 - d2).abs() < 1e-12 * d1);
        assert!((d1 - mahalanobis_sq(b, a, &sigma).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn singular_and_asymmetric_rejected() {
        let p = Position2::new(1.0, 1.0);
        assert!(matches!(
            mahalanobis_sq(p, Position2::ORIGIN, &Cov2::from_rows([[1.0, 1.0], [1.0, 1.0]])),
            Err(Error::Singular { .. })
        ));
        assert!(matches!(
            mahalanobis_sq(p, Position2::ORIGIN, &Cov2::from_rows([[1.0, 0.5], [0.0, 1.0]])),
            Err(Error::Asymmetric)
        ));
        assert!(matches!(Cov2::diag(1.0, 1e-13).inverse(), Err(Error::Singular { .. })));
    }

    #[test]
    fn rotation_preserves_eigenvalues() {
        let c = Cov2::diag(100.0, 9.0).rotated(0.7);
        let (lo, hi) = c.eigenvalues();
        assert!((lo - 9.0).abs() < 1e-9 && (hi - 100.0).abs() < 1e-9);
        assert!(c.is_symmetric());
    }
}
