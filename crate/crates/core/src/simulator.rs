//! Scenario simulator: ground truth under nearly-constant-velocity or
//! coordinated-turn motion, state-dependent detection, Poisson clutter, and
//! the resulting measurement frames.
//!
//! Two scenarios are provided. The linear one has a single target life with
//! direct position measurements and clutter over a square; the nonlinear one
//! has two lives, range-bearing measurements converted to positions, and
//! clutter over a half disk. Everything is deterministic per seed.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::measmodel::{
    convert_measurement, converted_covariance, measure_position, measure_range_bearing, PositionNoiseModel,
    RangeBearingModel,
};
use crate::types::{Cov2, Measurement, MeasurementFrame, Position2, ScanIndex};
use crate::{Error, Result};

/// One target life: born at `birth_k` from N(mean, diag(cov_diag)), alive
/// through `death_k` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Life<const N: usize> {
    pub birth_k: ScanIndex,
    pub death_k: ScanIndex,
    #[serde(with = "serde_arrays")]
    pub mean: [f64; N],
    /// Diagonal of the birth covariance. Squared first when the scenario's
    /// `square_birth_cov` is set (i.e. entries are standard deviations).
    #[serde(with = "serde_arrays")]
    pub cov_diag: [f64; N],
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(v: &[f64; N], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[f64; N], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        let len = v.len();
        v.try_into()
            .map_err(|_| serde::de::Error::custom(format!("expected {N} values, got {len}")))
    }
}

/// Nearly-constant-velocity target, direct position measurements, clutter
/// uniform over a rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearScenarioConfig {
    pub duration: ScanIndex,
    /// State order: [px, vx, py, vy].
    pub life: Life<4>,
    pub square_birth_cov: bool,
    /// Process noise covariance is `q_scale`·I₂ m²/s⁴.
    pub q_scale: f64,
    pub detection_prob: f64,
    pub clutter_rate: f64,
    /// Clutter rectangle [x_min, x_max, y_min, y_max], m.
    pub region: [f64; 4],
    /// Measurement noise variances (x, y), m².
    pub meas_var: [f64; 2],
}

impl Default for LinearScenarioConfig {
    fn default() -> Self {
        Self {
            duration: 100,
            life: Life {
                birth_k: 10,
                death_k: 80,
                mean: [-500.0, 10.0, -500.0, 10.0],
                cov_diag: [100.0, 10.0, 100.0, 10.0],
            },
            square_birth_cov: true,
            q_scale: 1.0,
            detection_prob: 0.95,
            clutter_rate: 2.0,
            region: [-1000.0, 1000.0, -1000.0, 1000.0],
            meas_var: [100.0, 100.0],
        }
    }
}

/// Coordinated-turn target with a random-walk turn rate, range-bearing
/// measurements, range-dependent detection and half-disk clutter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearScenarioConfig {
    pub duration: ScanIndex,
    /// State order: [px, vx, py, vy, ω].
    pub lives: Vec<Life<5>>,
    pub square_birth_cov: bool,
    /// Acceleration noise, m/s².
    pub sigma_w: f64,
    /// Turn-rate noise, rad/s.
    pub sigma_u: f64,
    pub sigma_r: f64,
    pub sigma_theta: f64,
    pub max_detection_prob: f64,
    /// Length scale of the detection fall-off, m.
    pub detection_scale: f64,
    pub clutter_rate: f64,
    pub clutter_radius: f64,
    /// Apply the exp(σθ²/2) debiasing to converted measurements.
    pub debias: bool,
}

impl Default for NonlinearScenarioConfig {
    fn default() -> Self {
        let cov_diag = [100.0, 10.0, 100.0, 10.0, 0.01];
        Self {
            duration: 150,
            lives: vec![
                Life {
                    birth_k: 10,
                    death_k: 80,
                    mean: [100.0, 10.0, 100.0, 10.0, 0.01],
                    cov_diag,
                },
                Life {
                    birth_k: 90,
                    death_k: 110,
                    mean: [500.0, 10.0, 500.0, 10.0, 0.01],
                    cov_diag,
                },
            ],
            square_birth_cov: false,
            sigma_w: 2.0,
            sigma_u: PI / 180.0,
            sigma_r: 10.0,
            sigma_theta: PI / 90.0,
            max_detection_prob: 0.95,
            detection_scale: 2000.0,
            clutter_rate: 2.0,
            clutter_radius: 2000.0,
            debias: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioConfig {
    Linear(LinearScenarioConfig),
    Nonlinear(NonlinearScenarioConfig),
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::Linear(LinearScenarioConfig::default())
    }
}

impl ScenarioConfig {
    pub fn duration(&self) -> ScanIndex {
        match self {
            ScenarioConfig::Linear(c) => c.duration,
            ScenarioConfig::Nonlinear(c) => c.duration,
        }
    }

    /// (birth, death) scan pairs, in order.
    pub fn lives(&self) -> Vec<(ScanIndex, ScanIndex)> {
        match self {
            ScenarioConfig::Linear(c) => vec![(c.life.birth_k, c.life.death_k)],
            ScenarioConfig::Nonlinear(c) => c.lives.iter().map(|l| (l.birth_k, l.death_k)).collect(),
        }
    }

    pub fn clutter_region(&self) -> ClutterRegion {
        match self {
            ScenarioConfig::Linear(c) => ClutterRegion::Rectangle {
                x_min: c.region[0],
                x_max: c.region[1],
                y_min: c.region[2],
                y_max: c.region[3],
            },
            ScenarioConfig::Nonlinear(c) => ClutterRegion::HalfDisk {
                radius: c.clutter_radius,
            },
        }
    }

    pub fn clutter_rate(&self) -> f64 {
        match self {
            ScenarioConfig::Linear(c) => c.clutter_rate,
            ScenarioConfig::Nonlinear(c) => c.clutter_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let duration = self.duration();
        let lives = self.lives();
        if lives.is_empty() {
            return Err(Error::Config("scenario needs at least one target life".into()));
        }
        let mut prev_death = 0;
        for (birth, death) in lives {
            if !(birth >= 1 && birth < death && death <= duration) {
                return Err(Error::Config(format!(
                    "target life [{birth}, {death}] must satisfy 1 <= birth < death <= duration ({duration})"
                )));
            }
            if birth <= prev_death {
                return Err(Error::Config("target lives must be disjoint and ordered".into()));
            }
            prev_death = death;
        }
        let (pd, rate) = match self {
            ScenarioConfig::Linear(c) => {
                if !(c.q_scale >= 0.0) || !(c.meas_var[0] > 0.0 && c.meas_var[1] > 0.0) {
                    return Err(Error::Config("q_scale must be >= 0 and meas_var positive".into()));
                }
                if !(c.region[0] < c.region[1] && c.region[2] < c.region[3]) {
                    return Err(Error::Config("clutter region must have positive extent".into()));
                }
                (c.detection_prob, c.clutter_rate)
            }
            ScenarioConfig::Nonlinear(c) => {
                if !(c.sigma_r > 0.0 && c.sigma_theta > 0.0) {
                    return Err(Error::Config("sigma_r and sigma_theta must be positive".into()));
                }
                if !(c.sigma_w >= 0.0 && c.sigma_u >= 0.0 && c.clutter_radius > 0.0 && c.detection_scale > 0.0) {
                    return Err(Error::Config("noise scales must be >= 0 and radii positive".into()));
                }
                (c.max_detection_prob, c.clutter_rate)
            }
        };
        if !(0.0..=1.0).contains(&pd) {
            return Err(Error::Config(format!("detection probability {pd} outside [0, 1]")));
        }
        if !(rate >= 0.0) {
            return Err(Error::Config(format!("clutter rate {rate} must be >= 0")));
        }
        Ok(())
    }
}

/// Kinematic truth at one scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthState {
    pub pos: Position2,
    pub vel: [f64; 2],
    pub turn_rate: Option<f64>,
}

/// Truth per scan from scan 1 to the scenario duration; `None` while no
/// target exists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    states: Vec<Option<TruthState>>,
}

impl GroundTruth {
    pub fn new(states: Vec<Option<TruthState>>) -> Self {
        Self { states }
    }

    /// Truth with positions only, starting at scan `first_k`, preceded by
    /// absent scans.
    pub fn from_positions(first_k: ScanIndex, positions: &[Position2]) -> Self {
        let mut states = vec![None; first_k.saturating_sub(1) as usize];
        states.extend(positions.iter().map(|&pos| {
            Some(TruthState {
                pos,
                vel: [0.0, 0.0],
                turn_rate: None,
            })
        }));
        Self { states }
    }

    pub fn duration(&self) -> ScanIndex {
        self.states.len() as ScanIndex
    }

    pub fn get(&self, k: ScanIndex) -> Option<&TruthState> {
        if k == 0 {
            return None;
        }
        self.states.get(k as usize - 1).and_then(Option::as_ref)
    }

    pub fn position(&self, k: ScanIndex) -> Option<Position2> {
        self.get(k).map(|s| s.pos)
    }

    pub fn is_alive(&self, k: ScanIndex) -> bool {
        self.get(k).is_some()
    }

    /// Iterator over (k, state) for every scan 1..=duration.
    pub fn iter(&self) -> impl Iterator<Item = (ScanIndex, Option<&TruthState>)> {
        self.states.iter().enumerate().map(|(i, s)| (i as ScanIndex + 1, s.as_ref()))
    }
}

/// A generated experiment: truth plus one frame per scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub truth: GroundTruth,
    pub frames: Vec<MeasurementFrame>,
}

/// Nearly-constant-velocity step (Δ = 1) on [px, vx, py, vy] with
/// acceleration noise N(0, q_scale·I₂).
pub fn cv_step<R: Rng + ?Sized>(state: [f64; 4], q_scale: f64, rng: &mut R) -> [f64; 4] {
    let sd = q_scale.max(0.0).sqrt();
    let ux = sd * Distribution::<f64>::sample(&StandardNormal, rng);
    let uy = sd * Distribution::<f64>::sample(&StandardNormal, rng);
    let [px, vx, py, vy] = state;
    [px + vx + 0.5 * ux, vx + ux, py + vy + 0.5 * uy, vy + uy]
}

/// Noise-free coordinated-turn transition on [px, vx, py, vy, ω].
pub fn ct_transition(state: [f64; 5]) -> [f64; 5] {
    let [px, vx, py, vy, w] = state;
    let (s, c) = w.sin_cos();
    let (a, b) = if w.abs() < 1e-9 {
        (1.0, 0.0)
    } else {
        (s / w, (1.0 - c) / w)
    };
    [
        px + a * vx - b * vy,
        c * vx - s * vy,
        py + b * vx + a * vy,
        s * vx + c * vy,
        w,
    ]
}

/// Coordinated-turn step with additive noise: per axis σ_w·z·[½, 1] on
/// (position, velocity), σ_u·z on the turn rate.
pub fn ct_step<R: Rng + ?Sized>(state: [f64; 5], sigma_w: f64, sigma_u: f64, rng: &mut R) -> [f64; 5] {
    let mut next = ct_transition(state);
    let zx: f64 = StandardNormal.sample(rng);
    let zy: f64 = StandardNormal.sample(rng);
    let zw: f64 = StandardNormal.sample(rng);
    next[0] += 0.5 * sigma_w * zx;
    next[1] += sigma_w * zx;
    next[2] += 0.5 * sigma_w * zy;
    next[3] += sigma_w * zy;
    next[4] += sigma_u * zw;
    next
}

/// Detection probability at `pos`: constant in the linear scenario,
/// p_max·exp(−‖p‖²/(2 s²)) in the nonlinear one.
pub fn detection_probability(pos: Position2, config: &ScenarioConfig) -> f64 {
    match config {
        ScenarioConfig::Linear(c) => c.detection_prob,
        ScenarioConfig::Nonlinear(c) => {
            let s2 = c.detection_scale * c.detection_scale;
            c.max_detection_prob * (-pos.norm_sq() / (2.0 * s2)).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClutterRegion {
    Rectangle {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    /// {(x, y): x² + y² ≤ radius², y ≥ 0}
    HalfDisk { radius: f64 },
}

impl ClutterRegion {
    pub fn area(&self) -> f64 {
        match *self {
            ClutterRegion::Rectangle {
                x_min,
                x_max,
                y_min,
                y_max,
            } => (x_max - x_min) * (y_max - y_min),
            ClutterRegion::HalfDisk { radius } => 0.5 * PI * radius * radius,
        }
    }

    pub fn contains(&self, p: Position2) -> bool {
        match *self {
            ClutterRegion::Rectangle {
                x_min,
                x_max,
                y_min,
                y_max,
            } => (x_min..=x_max).contains(&p.x) && (y_min..=y_max).contains(&p.y),
            ClutterRegion::HalfDisk { radius } => p.y >= 0.0 && p.norm_sq() <= radius * radius,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position2 {
        match *self {
            ClutterRegion::Rectangle {
                x_min,
                x_max,
                y_min,
                y_max,
            } => Position2::new(rng.random_range(x_min..x_max), rng.random_range(y_min..y_max)),
            ClutterRegion::HalfDisk { radius } => {
                let r = radius * rng.random::<f64>().sqrt();
                let phi = PI * rng.random::<f64>();
                Position2::new(r * phi.cos(), r * phi.sin())
            }
        }
    }
}

/// Poisson(`rate`) clutter points uniform over `region`.
pub fn gen_clutter<R: Rng + ?Sized>(region: &ClutterRegion, rate: f64, rng: &mut R) -> Vec<Position2> {
    if !(rate > 0.0) {
        return Vec::new();
    }
    let n = Poisson::new(rate).expect("positive rate").sample(rng) as usize;
    (0..n).map(|_| region.sample(rng)).collect()
}

fn draw_birth<R: Rng + ?Sized, const N: usize>(life: &Life<N>, square: bool, rng: &mut R) -> [f64; N] {
    let mut x = life.mean;
    for (xi, &d) in x.iter_mut().zip(&life.cov_diag) {
        let sd = if square { d.abs() } else { d.max(0.0).sqrt() };
        *xi += sd * Distribution::<f64>::sample(&StandardNormal, rng);
    }
    x
}

fn simulate_truth<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> GroundTruth {
    let mut states = vec![None; config.duration() as usize];
    match config {
        ScenarioConfig::Linear(c) => {
            let mut x = draw_birth(&c.life, c.square_birth_cov, rng);
            for k in c.life.birth_k..=c.life.death_k {
                if k > c.life.birth_k {
                    x = cv_step(x, c.q_scale, rng);
                }
                states[k as usize - 1] = Some(TruthState {
                    pos: Position2::new(x[0], x[2]),
                    vel: [x[1], x[3]],
                    turn_rate: None,
                });
            }
        }
        ScenarioConfig::Nonlinear(c) => {
            for life in &c.lives {
                let mut x = draw_birth(life, c.square_birth_cov, rng);
                for k in life.birth_k..=life.death_k {
                    if k > life.birth_k {
                        x = ct_step(x, c.sigma_w, c.sigma_u, rng);
                    }
                    states[k as usize - 1] = Some(TruthState {
                        pos: Position2::new(x[0], x[2]),
                        vel: [x[1], x[3]],
                        turn_rate: Some(x[4]),
                    });
                }
            }
        }
    }
    GroundTruth::new(states)
}

/// Generates truth and frames for `config`, deterministically from `seed`.
pub fn generate(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = simulate_truth(config, &mut rng);
    let region = config.clutter_region();
    let rate = config.clutter_rate();
    let mut frames = Vec::with_capacity(truth.duration() as usize);
    for (k, state) in truth.iter() {
        let mut points = Vec::new();
        if let Some(s) = state {
            if rng.random::<f64>() < detection_probability(s.pos, config) {
                points.push(measure_target(s.pos, config, &mut rng)?);
            }
        }
        for p in gen_clutter(&region, rate, &mut rng) {
            points.push(clutter_measurement(p, config));
        }
        points.shuffle(&mut rng);
        frames.push(MeasurementFrame::new(k, points));
    }
    Ok(Scenario { truth, frames })
}

fn measure_target<R: Rng + ?Sized>(pos: Position2, config: &ScenarioConfig, rng: &mut R) -> Result<Measurement> {
    match config {
        ScenarioConfig::Linear(c) => {
            let model = PositionNoiseModel {
                cov: Cov2::diag(c.meas_var[0], c.meas_var[1]),
            };
            Ok(Measurement::new(measure_position(pos, &model, rng), model.cov))
        }
        ScenarioConfig::Nonlinear(c) => {
            let model = RangeBearingModel {
                sigma_r: c.sigma_r,
                sigma_theta: c.sigma_theta,
            };
            let rb = measure_range_bearing(pos, &model, rng)?;
            Ok(convert_measurement(rb, &model, c.debias))
        }
    }
}

/// Clutter carries the covariance a sensor report at that location would,
/// so it cannot be told apart from target measurements by covariance.
fn clutter_measurement(p: Position2, config: &ScenarioConfig) -> Measurement {
    match config {
        ScenarioConfig::Linear(c) => Measurement::new(p, Cov2::diag(c.meas_var[0], c.meas_var[1])),
        ScenarioConfig::Nonlinear(c) => {
            let model = RangeBearingModel {
                sigma_r: c.sigma_r,
                sigma_theta: c.sigma_theta,
            };
            // Keep the range strictly positive so the covariance stays invertible.
            let r = p.norm().max(1.0);
            Measurement::new(p, converted_covariance(r, p.y.atan2(p.x), &model))
        }
    }
}

/// Largest norm of the second difference of true position over consecutive
/// alive scans: a discrete bound on the trajectory's acceleration.
pub fn empirical_beta(truth: &GroundTruth) -> Result<f64> {
    let mut best: Option<f64> = None;
    let pos: Vec<Option<Position2>> = truth.iter().map(|(_, s)| s.map(|s| s.pos)).collect();
    for w in pos.windows(3) {
        if let [Some(a), Some(b), Some(c)] = *w {
            let d = (c - b) - (b - a);
            let n = d.norm();
            best = Some(best.map_or(n, |m: f64| m.max(n)));
        }
    }
    best.ok_or(Error::InsufficientData { needed: 3, got: 0 })
}
