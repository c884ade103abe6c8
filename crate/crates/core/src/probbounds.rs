//! Probability calculators for uniform clutter near a point and for the
//! distance between two independent noisy measurements.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::types::Cov2;
use crate::{Error, Result};

/// Probability that one uniformly placed clutter point lands within `d_o`
/// of a given interior point of a region of area `area` (boundary ignored).
pub fn near_prob(d_o: f64, area: f64) -> Result<f64> {
    if !(d_o >= 0.0) || !(area > 0.0) {
        return Err(Error::invalid(format!("need d_o >= 0 and area > 0, got {d_o}, {area}")));
    }
    let p1 = PI * d_o * d_o / area;
    if p1 > 1.0 {
        return Err(Error::invalid(format!(
            "circle of radius {d_o} m is larger than the surveillance area {area} m²"
        )));
    }
    Ok(p1)
}

/// Probability that none of `clutter_rate` independent clutter points is near.
///
/// A non-integer rate is accepted and treated as an exponent.
pub fn all_far_prob(p1: f64, clutter_rate: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p1) || !(clutter_rate >= 0.0) {
        return Err(Error::invalid(format!(
            "need 0 <= p1 <= 1 and clutter rate >= 0, got {p1}, {clutter_rate}"
        )));
    }
    Ok((1.0 - p1).powf(clutter_rate))
}

/// Largest clutter rate for which all clutter stays outside the near circle
/// with confidence `p_r`, given the single-point near probability `p1`.
pub fn max_clutter_rate_from_p1(p1: f64, p_r: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::invalid(format!("need 0 < p1 < 1, got {p1}")));
    }
    if !(p_r > 0.0 && p_r < 1.0) {
        return Err(Error::invalid(format!("need 0 < p_r < 1, got {p_r}")));
    }
    Ok(p_r.ln() / (1.0 - p1).ln())
}

/// [`max_clutter_rate_from_p1`] with p1 computed from the geometry.
pub fn max_clutter_rate(d_o: f64, area: f64, p_r: f64) -> Result<f64> {
    let p1 = near_prob(d_o, area)?;
    if p1 == 0.0 || p1 == 1.0 {
        return Err(Error::invalid("degenerate geometry: near circle is empty or covers the region"));
    }
    max_clutter_rate_from_p1(p1, p_r)
}

/// Probability that two i.i.d. `dim`-dimensional Gaussians are within
/// Mahalanobis radius `tau` of each other, in units of their common
/// covariance: the chi-squared(dim) CDF at τ², i.e. the regularized lower
/// incomplete gamma P(dim/2, τ²/2).
pub fn gaussian_confidence(dim: u32, tau: f64) -> Result<f64> {
    if dim == 0 || !(tau > 0.0) {
        return Err(Error::invalid(format!("need dim >= 1 and tau > 0, got {dim}, {tau}")));
    }
    if tau.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_lr(f64::from(dim) / 2.0, tau * tau / 2.0))
}

/// Chebyshev bound Pr[|c| ≥ a] ≤ σ²/a² for a zero-mean variable of variance σ², clamped to 1.
pub fn chebyshev_bound(variance: f64, a: f64) -> Result<f64> {
    if !(variance >= 0.0) || !(a > 0.0) {
        return Err(Error::invalid(format!("need variance >= 0 and a > 0, got {variance}, {a}")));
    }
    Ok((variance / (a * a)).min(1.0))
}

/// Vysochanskij–Petunin lower bound on the confidence of radius τ for a
/// unimodal distribution: 1 − 4D/(9τ²), clamped to [0, 1].
pub fn vp_bound(dim: u32, tau: f64) -> Result<f64> {
    if dim == 0 || !(tau > 0.0) {
        return Err(Error::invalid(format!("need dim >= 1 and tau > 0, got {dim}, {tau}")));
    }
    Ok((1.0 - 4.0 * f64::from(dim) / (9.0 * tau * tau)).clamp(0.0, 1.0))
}

/// Clutter geometry around a clustering neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterGeometry {
    /// Radius of the neighbourhood, m.
    pub d_o: f64,
    /// Surveillance area, m².
    pub area: f64,
    /// Mean clutter points per scan.
    pub clutter_rate: f64,
}

impl ClutterGeometry {
    /// Neighbourhood of the initiation test: Mahalanobis radius `tau1`
    /// converted to metres along the widest axis of the noise covariance.
    pub fn for_clustering(tau1: f64, noise: &Cov2, area: f64, clutter_rate: f64) -> Self {
        Self {
            d_o: tau1 * noise.max_eigenvalue().sqrt(),
            area,
            clutter_rate,
        }
    }

    pub fn near_prob(&self) -> Result<f64> {
        near_prob(self.d_o, self.area)
    }

    /// Per-scan probability that no clutter is near a given point.
    pub fn far_prob(&self) -> Result<f64> {
        all_far_prob(self.near_prob()?, self.clutter_rate)
    }
}
