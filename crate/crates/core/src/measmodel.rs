//! Measurement generation and range-bearing to Cartesian conversion.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::types::{Cov2, Measurement, Position2};
use crate::{Error, Result};

/// Additive Gaussian position noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionNoiseModel {
    pub cov: Cov2,
}

impl Default for PositionNoiseModel {
    fn default() -> Self {
        Self {
            cov: Cov2::diag(100.0, 100.0),
        }
    }
}

/// Independent Gaussian range and bearing noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeBearingModel {
    /// Range standard deviation, m.
    pub sigma_r: f64,
    /// Bearing standard deviation, rad.
    pub sigma_theta: f64,
}

impl Default for RangeBearingModel {
    fn default() -> Self {
        Self {
            sigma_r: 10.0,
            sigma_theta: PI / 90.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeBearing {
    pub r: f64,
    pub theta: f64,
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Draws a zero-mean sample with covariance `cov` (positive semi-definite).
pub fn sample_gaussian2<R: Rng + ?Sized>(cov: &Cov2, rng: &mut R) -> Position2 {
    let a = cov.xx().max(0.0);
    let l11 = a.sqrt();
    let l21 = if l11 > 0.0 { cov.xy() / l11 } else { 0.0 };
    let l22 = (cov.yy() - l21 * l21).max(0.0).sqrt();
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    Position2::new(l11 * z1, l21 * z1 + l22 * z2)
}

pub fn measure_position<R: Rng + ?Sized>(truth: Position2, model: &PositionNoiseModel, rng: &mut R) -> Position2 {
    truth + sample_gaussian2(&model.cov, rng)
}

/// Noisy range and bearing, bearing measured counter-clockwise from +x.
pub fn measure_range_bearing<R: Rng + ?Sized>(
    truth: Position2,
    model: &RangeBearingModel,
    rng: &mut R,
) -> Result<RangeBearing> {
    if truth.norm_sq() == 0.0 {
        return Err(Error::invalid("bearing of a target at the sensor origin is undefined"));
    }
    let nr: f64 = StandardNormal.sample(rng);
    let nt: f64 = StandardNormal.sample(rng);
    Ok(RangeBearing {
        r: truth.norm() + model.sigma_r * nr,
        theta: wrap_angle(truth.y.atan2(truth.x) + model.sigma_theta * nt),
    })
}

pub fn convert_to_position(r: f64, theta: f64) -> Position2 {
    let (s, c) = theta.sin_cos();
    Position2::new(r * c, r * s)
}

/// Multiplicative correction exp(σθ²/2) for the E[cos v] = exp(−σθ²/2)
/// attenuation of converted noisy bearings.
pub fn debias_factor(sigma_theta: f64) -> f64 {
    (0.5 * sigma_theta * sigma_theta).exp()
}

/// First-order covariance of the converted position, J diag(σr², σθ²) Jᵀ.
pub fn converted_covariance(r: f64, theta: f64, model: &RangeBearingModel) -> Cov2 {
    let (s, c) = theta.sin_cos();
    let vr = model.sigma_r * model.sigma_r;
    let vt = model.sigma_theta * model.sigma_theta * r * r;
    let xx = c * c * vr + s * s * vt;
    let yy = s * s * vr + c * c * vt;
    let xy = s * c * (vr - vt);
    Cov2::from_rows([[xx, xy], [xy, yy]])
}

/// Converts a range-bearing measurement to a position measurement with its
/// linearized covariance, optionally debiased.
pub fn convert_measurement(rb: RangeBearing, model: &RangeBearingModel, debias: bool) -> Measurement {
    let scale = if debias { debias_factor(model.sigma_theta) } else { 1.0 };
    Measurement::new(
        convert_to_position(rb.r, rb.theta) * scale,
        converted_covariance(rb.r.abs(), rb.theta, model),
    )
}
