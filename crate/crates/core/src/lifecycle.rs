//! The tracker state machine: search for a target, track it, terminate it
//! after too many consecutive misses, and search again.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::initiation::{cluster_window, seed_trajectory, InitiationConfig, MAX_ESCALATIONS};
use crate::maintenance::{update_track, MaintenanceConfig, TrackBuffer};
use crate::polyfit::PolyTrajectory;
use crate::types::{MeasurementFrame, Position2, ScanIndex};
use crate::{Error, Result};

/// Every tracker parameter. Defaults are the recommended values
/// τ₁ = 3, τ₂ = 5, γ = 1, T = 10, Ts = 4, Te = 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    pub tau1: f64,
    pub tau2: f64,
    pub gamma: usize,
    /// Window length T in scans.
    pub window: usize,
    /// Minimum cluster size Ts for confirmation.
    pub min_cluster_size: usize,
    /// A track dies once its miss streak exceeds Te.
    pub max_misses: u32,
    /// Optional detection probability, used only to sanity-check Ts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_prob: Option<f64>,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            tau1: 3.0,
            tau2: 5.0,
            gamma: 1,
            window: 10,
            min_cluster_size: 4,
            max_misses: 4,
            detection_prob: None,
        }
    }
}

impl TrackerConfig {
    pub fn initiation(&self) -> InitiationConfig {
        InitiationConfig {
            tau1: self.tau1,
            min_cluster_size: self.min_cluster_size,
            window: self.window,
            gamma: self.gamma,
            detection_prob: self.detection_prob,
        }
    }

    pub fn maintenance(&self) -> MaintenanceConfig {
        MaintenanceConfig {
            tau2: self.tau2,
            window: self.window,
            gamma: self.gamma,
        }
    }

    /// Hard errors for invalid values, warnings for questionable ones.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.gamma == 0 {
            return Err(Error::Config("gamma must be at least 1".into()));
        }
        self.maintenance().validate()?;
        self.initiation().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    None,
    Confirmed,
    Terminated,
    Missed,
}

impl Event {
    pub fn as_str(self) -> &'static str {
        match self {
            Event::None => "none",
            Event::Confirmed => "confirmed",
            Event::Terminated => "terminated",
            Event::Missed => "missed",
        }
    }

    pub fn parse(s: &str) -> Option<Event> {
        match s {
            "none" => Some(Event::None),
            "confirmed" => Some(Event::Confirmed),
            "terminated" => Some(Event::Terminated),
            "missed" => Some(Event::Missed),
            _ => None,
        }
    }
}

/// Per-scan output. An estimate is present exactly when the tracker is
/// tracking after the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOutput {
    pub k: ScanIndex,
    pub estimate: Option<Position2>,
    pub velocity: Option<[f64; 2]>,
    pub event: Event,
}

#[derive(Debug, Clone)]
enum Mode {
    Searching {
        history: VecDeque<MeasurementFrame>,
    },
    Tracking {
        traj: PolyTrajectory,
        buffer: TrackBuffer,
    },
}

/// Single-target tracker. Feed it one frame per scan, in scan order.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    mode: Mode,
    last_k: Option<ScanIndex>,
    degraded_fits: u64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            mode: Mode::Searching {
                history: VecDeque::new(),
            },
            last_k: None,
            degraded_fits: 0,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn is_tracking(&self) -> bool {
        matches!(self.mode, Mode::Tracking { .. })
    }

    /// Current trajectory, when tracking.
    pub fn trajectory(&self) -> Option<&PolyTrajectory> {
        match &self.mode {
            Mode::Tracking { traj, .. } => Some(traj),
            Mode::Searching { .. } => None,
        }
    }

    /// Number of acceptances whose refit was skipped.
    pub fn degraded_fits(&self) -> u64 {
        self.degraded_fits
    }

    /// Smoothed positions of the current track at every buffered scan,
    /// evaluated with the latest fit. Empty while searching.
    pub fn backfill(&self) -> Vec<(ScanIndex, Position2)> {
        match &self.mode {
            Mode::Tracking { traj, buffer } => buffer
                .accepted
                .iter()
                .map(|(k, _)| (*k, traj.evaluate(f64::from(*k))))
                .collect(),
            Mode::Searching { .. } => Vec::new(),
        }
    }

    /// Frames kept while searching: the clustering window plus room for the
    /// window extensions of multi-cluster resolution.
    fn history_len(&self) -> u32 {
        (self.config.window + MAX_ESCALATIONS) as u32
    }

    pub fn step(&mut self, frame: &MeasurementFrame) -> Result<ScanOutput> {
        let k = frame.k;
        if let Some(last) = self.last_k {
            if k <= last {
                return Err(Error::Protocol(format!("scan {k} received after scan {last}")));
            }
        }
        self.last_k = Some(k);
        let keep = self.history_len();

        let (next, output) = match std::mem::replace(
            &mut self.mode,
            Mode::Searching {
                history: VecDeque::new(),
            },
        ) {
            Mode::Searching { mut history } => {
                history.push_back(frame.clone());
                while history.front().is_some_and(|f| k - f.k >= keep) {
                    history.pop_front();
                }
                let frames = history.make_contiguous();
                match cluster_window(frames, &self.config.initiation())? {
                    Some(cluster) => {
                        let traj = seed_trajectory(&cluster, self.config.gamma)?;
                        let t = f64::from(k);
                        let out = ScanOutput {
                            k,
                            estimate: Some(traj.evaluate(t)),
                            velocity: Some(traj.velocity(t)),
                            event: Event::Confirmed,
                        };
                        let buffer = TrackBuffer::from_points(cluster.points());
                        (Mode::Tracking { traj, buffer }, out)
                    }
                    None => (
                        Mode::Searching { history },
                        ScanOutput {
                            k,
                            estimate: None,
                            velocity: None,
                            event: Event::None,
                        },
                    ),
                }
            }
            Mode::Tracking {
                mut traj,
                mut buffer,
            } => {
                let update = update_track(&mut buffer, &mut traj, frame, &self.config.maintenance())?;
                if update.degraded {
                    self.degraded_fits += 1;
                }
                if buffer.miss_streak > self.config.max_misses {
                    (
                        Mode::Searching {
                            history: VecDeque::new(),
                        },
                        ScanOutput {
                            k,
                            estimate: None,
                            velocity: None,
                            event: Event::Terminated,
                        },
                    )
                } else {
                    let t = f64::from(k);
                    let out = ScanOutput {
                        k,
                        estimate: Some(traj.evaluate(t)),
                        velocity: Some(traj.velocity(t)),
                        event: if update.accepted.is_some() {
                            Event::None
                        } else {
                            Event::Missed
                        },
                    };
                    (Mode::Tracking { traj, buffer }, out)
                }
            }
        };
        self.mode = next;
        Ok(output)
    }
}

/// Runs a fresh tracker over a whole frame sequence.
pub fn run_stream(frames: &[MeasurementFrame], config: TrackerConfig) -> Result<Vec<ScanOutput>> {
    let mut tracker = Tracker::new(config)?;
    frames.iter().map(|f| tracker.step(f)).collect()
}
