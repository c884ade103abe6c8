//! Per-scan track maintenance: predict from the current fit, pick the
//! nearest measurement, gate it, and refit over the sliding window.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::polyfit::PolyTrajectory;
use crate::types::{mahalanobis_sq, Cov2, Measurement, MeasurementFrame, Position2, ScanIndex};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaintenanceConfig {
    /// Mahalanobis gate radius.
    pub tau2: f64,
    /// Fitting window: accepted points from scans [max(1, k−T), k] are kept.
    pub window: usize,
    pub gamma: usize,
}

impl Default for MaintenanceConfig {
    fn default() -> Self {
        Self {
            tau2: 5.0,
            window: 10,
            gamma: 1,
        }
    }
}

impl MaintenanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau2 > 0.0) {
            return Err(Error::Config(format!("tau2 must be positive, got {}", self.tau2)));
        }
        if self.window == 0 {
            return Err(Error::Config("window length must be at least one scan".into()));
        }
        Ok(())
    }
}

/// Accepted target measurements inside the current window plus the
/// current run of consecutive misses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackBuffer {
    pub accepted: VecDeque<(ScanIndex, Measurement)>,
    pub miss_streak: u32,
}

impl TrackBuffer {
    pub fn from_points(points: impl IntoIterator<Item = (ScanIndex, Measurement)>) -> Self {
        let mut accepted: Vec<_> = points.into_iter().collect();
        accepted.sort_by_key(|(k, _)| *k);
        Self {
            accepted: accepted.into(),
            miss_streak: 0,
        }
    }

    pub fn points(&self) -> Vec<(ScanIndex, Measurement)> {
        self.accepted.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    /// Drops points older than max(1, k − window).
    pub fn prune(&mut self, k: ScanIndex, window: usize) {
        let oldest = window_start(k, window);
        while self.accepted.front().is_some_and(|(t, _)| *t < oldest) {
            self.accepted.pop_front();
        }
    }
}

/// First scan of the fitting window ending at `k`.
pub fn window_start(k: ScanIndex, window: usize) -> ScanIndex {
    let window = u32::try_from(window).unwrap_or(u32::MAX);
    k.saturating_sub(window).max(1)
}

/// One-step (or multi-step, across misses) position prediction.
pub fn predict_position(traj: &PolyTrajectory, k_next: ScanIndex) -> Position2 {
    traj.evaluate(f64::from(k_next))
}

/// The measurement function applied to a predicted position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementDomain {
    /// Direct position measurements.
    Position,
    /// Range-bearing measurements already converted to positions upstream.
    ConvertedRangeBearing,
    /// Raw range-bearing space.
    RangeBearing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PseudoMeasurement {
    Position(Position2),
    RangeBearing { r: f64, theta: f64 },
}

impl PseudoMeasurement {
    pub fn position(self) -> Option<Position2> {
        match self {
            PseudoMeasurement::Position(p) => Some(p),
            PseudoMeasurement::RangeBearing { .. } => None,
        }
    }
}

/// Maps a predicted position into measurement space. Noise is zero-mean,
/// so no offset is added.
pub fn pseudo_measurement(predicted: Position2, domain: MeasurementDomain) -> PseudoMeasurement {
    match domain {
        MeasurementDomain::Position | MeasurementDomain::ConvertedRangeBearing => {
            PseudoMeasurement::Position(predicted)
        }
        MeasurementDomain::RangeBearing => PseudoMeasurement::RangeBearing {
            r: predicted.norm(),
            theta: predicted.y.atan2(predicted.x),
        },
    }
}

/// Frame point with the smallest Euclidean distance to `pseudo`; ties go to
/// the earliest point in the frame.
pub fn nearest_candidate(frame: &MeasurementFrame, pseudo: Position2) -> Option<Measurement> {
    let mut best: Option<(f64, Measurement)> = None;
    for m in &frame.points {
        let d = m.pos.distance_sq(pseudo);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, *m));
        }
    }
    best.map(|(_, m)| m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateDecision {
    Accepted(Measurement),
    Miss,
}

/// Accepts the candidate iff its squared Mahalanobis distance to the pseudo
/// measurement is at most τ₂² (inclusive).
pub fn gate(candidate: Option<Measurement>, pseudo: Position2, sigma: &Cov2, tau2: f64) -> Result<GateDecision> {
    let Some(c) = candidate else {
        return Ok(GateDecision::Miss);
    };
    let d2 = mahalanobis_sq(c.pos, pseudo, sigma)?;
    Ok(if d2 <= tau2 * tau2 {
        GateDecision::Accepted(c)
    } else {
        GateDecision::Miss
    })
}

/// What happened to the track in one maintenance step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackUpdate {
    pub accepted: Option<Measurement>,
    /// The refit was skipped (too few points or singular normal equations)
    /// and the previous coefficients were kept despite an acceptance.
    pub degraded: bool,
}

/// Predict → pseudo-measure → nearest → gate → refit, in place.
///
/// On acceptance the point is appended, the miss streak resets, and the
/// trajectory is refit when at least γ+1 points remain in the window. On a
/// miss the streak grows and the trajectory is left untouched.
pub fn update_track(
    buffer: &mut TrackBuffer,
    traj: &mut PolyTrajectory,
    frame: &MeasurementFrame,
    cfg: &MaintenanceConfig,
) -> Result<TrackUpdate> {
    let k = frame.k;
    if buffer.accepted.back().is_some_and(|(last, _)| *last >= k) {
        return Err(Error::Protocol(format!("scan {k} is not newer than the track buffer")));
    }
    let predicted = predict_position(traj, k);
    let pseudo = pseudo_measurement(predicted, MeasurementDomain::Position)
        .position()
        .expect("position domain");
    let candidate = nearest_candidate(frame, pseudo);
    let decision = match candidate {
        Some(c) => gate(Some(c), pseudo, &c.cov, cfg.tau2)?,
        None => GateDecision::Miss,
    };
    buffer.prune(k, cfg.window);
    match decision {
        GateDecision::Miss => {
            buffer.miss_streak += 1;
            Ok(TrackUpdate {
                accepted: None,
                degraded: false,
            })
        }
        GateDecision::Accepted(m) => {
            buffer.accepted.push_back((k, m));
            buffer.miss_streak = 0;
            let degraded = match PolyTrajectory::fit(&buffer.points(), cfg.gamma) {
                Ok(fit) => {
                    *traj = fit;
                    false
                }
                Err(Error::InsufficientData { .. } | Error::Singular { .. }) => true,
                Err(e) => return Err(e),
            };
            Ok(TrackUpdate {
                accepted: Some(m),
                degraded,
            })
        }
    }
}
