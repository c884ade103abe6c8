//! Track initiation: density clustering of windowed measurements under the
//! point-target (cannot-link) constraint, Ts-of-T confirmation, and seeding
//! of the first trajectory fit.
//!
//! Two measurements are neighbours when their squared Mahalanobis distance
//! is at most τ₁². Clusters are the connected components of the neighbour
//! graph with same-scan edges removed; a component is a candidate when it
//! holds points from at least Ts distinct scans.

use serde::{Deserialize, Serialize};

use crate::polyfit::PolyTrajectory;
use crate::types::{mahalanobis_sq, Cov2, Measurement, MeasurementFrame, Position2, ScanIndex};
use crate::{Error, Result};

/// Upper bound on Ts/window escalation rounds when several clusters compete.
pub const MAX_ESCALATIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitiationConfig {
    /// Mahalanobis neighbourhood radius.
    pub tau1: f64,
    /// Minimum number of scans in a confirmed cluster.
    pub min_cluster_size: usize,
    /// Clustering window length in scans.
    pub window: usize,
    pub gamma: usize,
    /// Detection probability, if known; only used to check the upper bound on Ts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_prob: Option<f64>,
}

impl Default for InitiationConfig {
    fn default() -> Self {
        Self {
            tau1: 3.0,
            min_cluster_size: 4,
            window: 10,
            gamma: 1,
            detection_prob: None,
        }
    }
}

impl InitiationConfig {
    /// Checks hard constraints and returns warnings for soft ones.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.tau1 > 0.0) {
            return Err(Error::Config(format!("tau1 must be positive, got {}", self.tau1)));
        }
        if self.min_cluster_size < self.gamma + 1 {
            return Err(Error::Config(format!(
                "Ts = {} is below gamma + 1 = {}; the seed fit would be underdetermined",
                self.min_cluster_size,
                self.gamma + 1
            )));
        }
        if self.min_cluster_size > self.window {
            return Err(Error::Config(format!(
                "Ts = {} exceeds the window length T = {}",
                self.min_cluster_size, self.window
            )));
        }
        let mut warnings = Vec::new();
        if let Some(pd) = self.detection_prob {
            if !(0.0..=1.0).contains(&pd) {
                return Err(Error::Config(format!("detection probability {pd} outside [0, 1]")));
            }
            let upper = self.window as f64 * pd;
            if self.min_cluster_size as f64 > upper {
                warnings.push(format!(
                    "Ts = {} exceeds the expected detections per window T*p_D = {upper:.2}",
                    self.min_cluster_size
                ));
            }
        }
        Ok(warnings)
    }
}

/// Outcome of the pairwise same-target test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// H0: at least one of the two measurements is clutter.
    Clutter,
    /// H1: both measurements come from the target.
    SameTarget,
}

/// H1 iff the squared Mahalanobis distance is at most τ₁² (inclusive).
pub fn neighbor_test(yi: Position2, yj: Position2, sigma: &Cov2, tau1: f64) -> Result<Hypothesis> {
    let d2 = mahalanobis_sq(yi, yj, sigma)?;
    Ok(if d2 <= tau1 * tau1 {
        Hypothesis::SameTarget
    } else {
        Hypothesis::Clutter
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterMember {
    pub k: ScanIndex,
    pub meas: Measurement,
}

/// A set of measurements from pairwise distinct scans, ordered by scan.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Cluster {
    pub members: Vec<ClusterMember>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn scans(&self) -> Vec<ScanIndex> {
        self.members.iter().map(|m| m.k).collect()
    }

    pub fn points(&self) -> Vec<(ScanIndex, Measurement)> {
        self.members.iter().map(|m| (m.k, m.meas)).collect()
    }

    pub fn first_scan(&self) -> Option<ScanIndex> {
        self.members.first().map(|m| m.k)
    }
}

/// Location of a point inside a slice of frames: (frame index, point index).
pub type PointId = (usize, usize);

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so the representative is deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the neighbour graph over all points in `frames`,
/// without edges between points of the same frame. Each component is sorted
/// and components are ordered by their first point.
pub fn components(frames: &[MeasurementFrame], tau1: f64) -> Result<Vec<Vec<PointId>>> {
    let ids: Vec<PointId> = frames
        .iter()
        .enumerate()
        .flat_map(|(f, frame)| (0..frame.points.len()).map(move |p| (f, p)))
        .collect();
    let point = |id: PointId| &frames[id.0].points[id.1];
    let mut sets = DisjointSet::new(ids.len());
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if ids[i].0 == ids[j].0 {
                continue;
            }
            let (a, b) = (point(ids[i]), point(ids[j]));
            let sigma = a.cov.average(&b.cov);
            if neighbor_test(a.pos, b.pos, &sigma, tau1)? == Hypothesis::SameTarget {
                sets.union(i, j);
            }
        }
    }
    let mut groups: Vec<Vec<PointId>> = Vec::new();
    let mut root_to_group = std::collections::BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        let root = sets.find(i);
        let g = *root_to_group.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(id);
    }
    Ok(groups)
}

/// Enforces one point per scan: where a component holds several points of
/// one scan, keeps the one closest (in its own Mahalanobis metric) to the
/// component centroid.
fn repair_cannot_link(frames: &[MeasurementFrame], component: &[PointId]) -> Result<Cluster> {
    let n = component.len() as f64;
    let centroid = component
        .iter()
        .fold(Position2::ORIGIN, |acc, &(f, p)| acc + frames[f].points[p].pos)
        * (1.0 / n);
    let mut members: Vec<ClusterMember> = Vec::new();
    let mut best_dist: Vec<f64> = Vec::new();
    for &(f, p) in component {
        let meas = frames[f].points[p];
        let k = frames[f].k;
        let d = mahalanobis_sq(meas.pos, centroid, &meas.cov)?;
        match members.iter().position(|m| m.k == k) {
            Some(slot) => {
                if d < best_dist[slot] {
                    members[slot] = ClusterMember { k, meas };
                    best_dist[slot] = d;
                }
            }
            None => {
                members.push(ClusterMember { k, meas });
                best_dist.push(d);
            }
        }
    }
    members.sort_by_key(|m| m.k);
    Ok(Cluster { members })
}

/// All clusters in `frames` with at least `min_size` distinct scans.
pub fn candidates(frames: &[MeasurementFrame], tau1: f64, min_size: usize) -> Result<Vec<Cluster>> {
    let mut out = Vec::new();
    for comp in components(frames, tau1)? {
        let mut scans: Vec<usize> = comp.iter().map(|&(f, _)| f).collect();
        scans.dedup();
        if scans.len() < min_size {
            continue;
        }
        let cluster = repair_cannot_link(frames, &comp)?;
        if cluster.len() >= min_size {
            out.push(cluster);
        }
    }
    Ok(out)
}

/// Trailing frames covering at most `window` scans, counted back from the
/// newest frame. `frames` must be ordered by scan.
pub fn window_frames(frames: &[MeasurementFrame], window: usize) -> &[MeasurementFrame] {
    let Some(last) = frames.last() else {
        return frames;
    };
    let window = u32::try_from(window).unwrap_or(u32::MAX);
    let start = frames.partition_point(|f| last.k - f.k >= window);
    &frames[start..]
}

/// Runs the clustering over the last `cfg.window` scans of `frames` and
/// returns the confirmed cluster, if exactly one (possibly after
/// escalation) exists.
pub fn cluster_window(frames: &[MeasurementFrame], cfg: &InitiationConfig) -> Result<Option<Cluster>> {
    let recent = window_frames(frames, cfg.window);
    let mut found = candidates(recent, cfg.tau1, cfg.min_cluster_size)?;
    match found.len() {
        0 => Ok(None),
        1 => Ok(found.pop()),
        _ => resolve_multiple(frames, cfg),
    }
}

/// Resolves competing clusters by raising Ts and lengthening the window one
/// step at a time (window bounded by the history in `frames`, Ts bounded by
/// the window) until at most one candidate survives. Gives up, returning
/// nothing, after [`MAX_ESCALATIONS`] rounds or when a bound is hit.
pub fn resolve_multiple(frames: &[MeasurementFrame], cfg: &InitiationConfig) -> Result<Option<Cluster>> {
    let (Some(first), Some(last)) = (frames.first(), frames.last()) else {
        return Ok(None);
    };
    let available = (last.k - first.k) as usize + 1;
    let mut min_size = cfg.min_cluster_size;
    let mut window = cfg.window.min(available);
    for _ in 0..MAX_ESCALATIONS {
        min_size += 1;
        window = (window + 1).min(available);
        if min_size > window {
            return Ok(None);
        }
        let mut found = candidates(window_frames(frames, window), cfg.tau1, min_size)?;
        match found.len() {
            0 => return Ok(None),
            1 => return Ok(found.pop()),
            _ => {}
        }
    }
    Ok(None)
}

/// Probability that at least `ts` of `window` scans put clutter near a given
/// point, when each scan keeps all of its clutter away with probability `p_r`:
/// Σ_{t=Ts}^{T} C(T,t) (1−p_r)^t p_r^{T−t}.
pub fn false_alarm_prob(ts: usize, window: usize, p_r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_r) {
        return Err(Error::invalid(format!("p_r must lie in [0, 1], got {p_r}")));
    }
    if ts > window {
        return Err(Error::invalid(format!("Ts = {ts} exceeds T = {window}")));
    }
    let q = 1.0 - p_r;
    // Accumulate from the top term down: pFA(t) = C(T,t) q^t p^(T−t) + pFA(t+1).
    let mut total = 0.0;
    let mut binom = 1.0; // C(T, T)
    for t in (ts..=window).rev() {
        total += binom * q.powi(t as i32) * p_r.powi((window - t) as i32);
        if t > 0 {
            // C(T, t−1) = C(T, t) · t / (T − t + 1)
            binom *= t as f64 / (window - t + 1) as f64;
        }
    }
    Ok(total.min(1.0))
}

/// Expected number of clutter-only clusters in one window when every
/// clutter point is taken as the "given point": T·r_c anchors, each needing
/// clutter near it in at least Ts−1 of the other T−1 scans. For rare events
/// this approximates the per-window false-confirmation probability.
pub fn anchored_false_alarm_rate(ts: usize, window: usize, clutter_rate: f64, p_r: f64) -> Result<f64> {
    if ts == 0 || window == 0 {
        return Err(Error::invalid("Ts and T must be at least 1"));
    }
    if !(clutter_rate >= 0.0) {
        return Err(Error::invalid(format!("clutter rate must be >= 0, got {clutter_rate}")));
    }
    Ok(window as f64 * clutter_rate * false_alarm_prob(ts - 1, window - 1, p_r)?)
}

/// Fits the first trajectory through a confirmed cluster.
pub fn seed_trajectory(cluster: &Cluster, gamma: usize) -> Result<PolyTrajectory> {
    PolyTrajectory::fit(&cluster.points(), gamma)
}
