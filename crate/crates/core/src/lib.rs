//! Joint detection and tracking of a single non-cooperative target.
//!
//! The target trajectory is modelled as a polynomial function of time fitted
//! by weighted least squares over a sliding window of scans. No motion,
//! birth, death or clutter model is needed by the tracker: tracks are
//! initiated by density clustering of windowed measurements, maintained by
//! nearest-neighbour gating against the fitted trajectory, and terminated
//! after a run of missed detections.
//!
//! Besides the tracker the crate carries a scenario simulator, the OSPA
//! metric, clutter/distance probability bounds and a Monte Carlo harness.

pub mod error;
pub mod harness;
pub mod initiation;
pub mod lifecycle;
pub mod linalg;
pub mod maintenance;
pub mod measmodel;
pub mod metrics;
pub mod polyfit;
pub mod probbounds;
pub mod simulator;
pub mod types;

pub use error::{Error, Result};
pub use lifecycle::{run_stream, Event, ScanOutput, Tracker, TrackerConfig};
pub use polyfit::PolyTrajectory;
pub use types::{mahalanobis_sq, Cov2, Measurement, MeasurementFrame, Position2, ScanIndex};
