//! Monte Carlo runs and their aggregation.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::records::{fmt_real, write_records_file, RunRecord};
use super::seed::run_seed;
use crate::lifecycle::{Event, ScanOutput, Tracker, TrackerConfig};
use crate::metrics::{timing_stats, OspaConfig, OspaSeries, TimingStats};
use crate::simulator::{generate, GroundTruth, Scenario};
use crate::types::ScanIndex;
use crate::{Error, Result};

/// A confirmation counts as a false track when no target exists or its
/// first estimate is farther than this from the target, m.
pub const FALSE_TRACK_DISTANCE: f64 = 100.0;

/// How the tracker handled one target life of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifeOutcome {
    pub birth: ScanIndex,
    pub death: ScanIndex,
    /// Scans from birth to the first confirmation during the life.
    pub confirmation_latency: Option<u32>,
    /// Scans from death to the termination of the track that was alive at
    /// death, if it terminated before the next birth.
    pub termination_latency: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: u32,
    pub seed: u64,
    pub records: Vec<RunRecord>,
    pub ospa: OspaSeries,
    pub lives: Vec<LifeOutcome>,
    pub false_tracks: u32,
    pub degraded_fits: u64,
    pub step_micros: Vec<f64>,
}

/// Runs the tracker over a scenario and scores it.
pub fn track_scenario(
    scenario: &Scenario,
    tracker: &TrackerConfig,
    ospa: &OspaConfig,
    run_id: u32,
    seed: u64,
) -> Result<RunResult> {
    let mut t = Tracker::new(*tracker)?;
    let mut outputs = Vec::with_capacity(scenario.frames.len());
    let mut step_micros = Vec::with_capacity(scenario.frames.len());
    for frame in &scenario.frames {
        let start = Instant::now();
        let out = t.step(frame)?;
        step_micros.push(start.elapsed().as_secs_f64() * 1e6);
        outputs.push(out);
    }
    let series = OspaSeries::from_run(&outputs, &scenario.truth, ospa)?;
    let records = outputs
        .iter()
        .zip(&series.values)
        .zip(&step_micros)
        .map(|((o, v), &us)| RunRecord {
            run_id,
            k: o.k,
            truth: scenario.truth.position(o.k),
            estimate: o.estimate,
            ospa: v.ospa,
            event: o.event,
            step_micros: Some(us),
        })
        .collect();
    Ok(RunResult {
        run_id,
        seed,
        records,
        ospa: series,
        lives: life_outcomes(&outputs, &scenario.truth),
        false_tracks: count_false_tracks(&outputs, &scenario.truth),
        degraded_fits: t.degraded_fits(),
        step_micros,
    })
}

/// Generates run `run_id` of `cfg` from its derived seed and tracks it.
pub fn simulate_run(cfg: &RunConfig, run_id: u32) -> Result<RunResult> {
    let seed = run_seed(cfg.monte_carlo.master_seed, u64::from(run_id));
    let scenario = generate(&cfg.scenario, seed)?;
    track_scenario(&scenario, &cfg.tracker, &cfg.ospa, run_id, seed)
}

/// Maximal runs of scans with a live target.
pub fn truth_lives(truth: &GroundTruth) -> Vec<(ScanIndex, ScanIndex)> {
    let mut lives = Vec::new();
    let mut start = None;
    for (k, s) in truth.iter() {
        match (s.is_some(), start) {
            (true, None) => start = Some(k),
            (false, Some(b)) => {
                lives.push((b, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(b) = start {
        lives.push((b, truth.duration()));
    }
    lives
}

fn life_outcomes(outputs: &[ScanOutput], truth: &GroundTruth) -> Vec<LifeOutcome> {
    let lives = truth_lives(truth);
    let end = outputs.last().map_or(0, |o| o.k);
    lives
        .iter()
        .enumerate()
        .map(|(i, &(birth, death))| {
            let next_birth = lives.get(i + 1).map_or(end + 1, |l| l.0);
            let confirmation_latency = outputs
                .iter()
                .find(|o| o.event == Event::Confirmed && (birth..=death).contains(&o.k))
                .map(|o| o.k - birth);
            let tracking_at_death = outputs.iter().any(|o| o.k == death && o.estimate.is_some());
            let termination_latency = if tracking_at_death {
                outputs
                    .iter()
                    .find(|o| o.event == Event::Terminated && o.k > death && o.k < next_birth)
                    .map(|o| o.k - death)
            } else {
                None
            };
            LifeOutcome {
                birth,
                death,
                confirmation_latency,
                termination_latency,
            }
        })
        .collect()
}

fn count_false_tracks(outputs: &[ScanOutput], truth: &GroundTruth) -> u32 {
    outputs
        .iter()
        .filter(|o| o.event == Event::Confirmed)
        .filter(|o| match (o.estimate, truth.position(o.k)) {
            (Some(e), Some(t)) => e.distance(t) > FALSE_TRACK_DISTANCE,
            _ => true,
        })
        .count() as u32
}

/// Distribution of a per-life latency over all completed runs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyStats {
    /// Lives considered.
    pub lives: usize,
    /// Lives where the event happened.
    pub observed: usize,
    pub mean: Option<f64>,
    /// Latency → number of lives.
    pub histogram: BTreeMap<u32, usize>,
}

impl LatencyStats {
    fn from_values(values: impl Iterator<Item = Option<u32>>) -> Self {
        let mut s = LatencyStats::default();
        let mut sum = 0u64;
        for v in values {
            s.lives += 1;
            if let Some(v) = v {
                s.observed += 1;
                sum += u64::from(v);
                *s.histogram.entry(v).or_default() += 1;
            }
        }
        s.mean = (s.observed > 0).then(|| sum as f64 / s.observed as f64);
        s
    }

    /// Fraction of all lives whose latency lies in `lo..=hi`.
    pub fn fraction_within(&self, lo: u32, hi: u32) -> f64 {
        if self.lives == 0 {
            return 0.0;
        }
        let n: usize = self.histogram.range(lo..=hi).map(|(_, c)| c).sum();
        n as f64 / self.lives as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifeSummary {
    pub birth: ScanIndex,
    pub death: ScanIndex,
    pub confirmation: LatencyStats,
    pub termination: LatencyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub run_id: u32,
    pub message: String,
}

/// Aggregate over the completed runs. Contains nothing timing-dependent, so
/// it is reproducible from the configuration alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: u32,
    pub completed: u32,
    pub master_seed: u64,
    pub failed_runs: Vec<FailedRun>,
    pub lives: Vec<LifeSummary>,
    pub false_tracks: u64,
    /// False tracks per completed run.
    pub false_track_rate: f64,
    pub degraded_fits: u64,
    pub mean_ospa: Option<OspaSeries>,
}

impl RunSummary {
    pub fn from_results(cfg: &RunConfig, results: &[RunResult], failed_runs: Vec<FailedRun>) -> Result<Self> {
        let completed = results.len() as u32;
        let lives = match results.first() {
            Some(first) => (0..first.lives.len())
                .map(|i| LifeSummary {
                    birth: first.lives[i].birth,
                    death: first.lives[i].death,
                    confirmation: LatencyStats::from_values(
                        results.iter().map(|r| r.lives.get(i).and_then(|l| l.confirmation_latency)),
                    ),
                    termination: LatencyStats::from_values(
                        results.iter().map(|r| r.lives.get(i).and_then(|l| l.termination_latency)),
                    ),
                })
                .collect(),
            None => Vec::new(),
        };
        let false_tracks: u64 = results.iter().map(|r| u64::from(r.false_tracks)).sum();
        let series: Vec<OspaSeries> = results.iter().map(|r| r.ospa.clone()).collect();
        Ok(RunSummary {
            runs: cfg.monte_carlo.runs,
            completed,
            master_seed: cfg.monte_carlo.master_seed,
            failed_runs,
            lives,
            false_tracks,
            false_track_rate: if completed == 0 {
                0.0
            } else {
                false_tracks as f64 / f64::from(completed)
            },
            degraded_fits: results.iter().map(|r| r.degraded_fits).sum(),
            mean_ospa: if series.is_empty() {
                None
            } else {
                Some(OspaSeries::mean(&series)?)
            },
        })
    }

    /// Mean over `from..=to` of the per-scan mean OSPA.
    pub fn mean_ospa_over(&self, from: ScanIndex, to: ScanIndex) -> Option<f64> {
        self.mean_ospa.as_ref().and_then(|s| s.mean_over(from, to))
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub summary: RunSummary,
    pub results: Vec<RunResult>,
    /// Per-step tracker timing over all runs, µs.
    pub timing: Option<TimingStats>,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Runs every Monte Carlo run on a pool of `threads` workers (0 = rayon's
/// default). Errors and panics in single runs are reported in the summary
/// without aborting the batch. Results are in run order.
pub fn run_experiment(cfg: &RunConfig, threads: usize) -> Result<Experiment> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let outcomes: Vec<(u32, std::result::Result<RunResult, String>)> = pool.install(|| {
        (0..cfg.monte_carlo.runs)
            .into_par_iter()
            .map(|i| {
                let r = catch_unwind(AssertUnwindSafe(|| simulate_run(cfg, i)));
                let r = match r {
                    Ok(Ok(res)) => Ok(res),
                    Ok(Err(e)) => Err(e.to_string()),
                    Err(p) => Err(format!("panicked: {}", panic_message(p))),
                };
                (i, r)
            })
            .collect()
    });
    let mut results = Vec::new();
    let mut failed = Vec::new();
    for (run_id, r) in outcomes {
        match r {
            Ok(res) => results.push(res),
            Err(message) => failed.push(FailedRun { run_id, message }),
        }
    }
    let summary = RunSummary::from_results(cfg, &results, failed)?;
    let samples: Vec<f64> = results.iter().flat_map(|r| r.step_micros.iter().copied()).collect();
    let timing = timing_stats(&samples).ok();
    Ok(Experiment {
        summary,
        results,
        timing,
    })
}

/// Writes `records.csv`, `summary.json`, `ospa_mean.csv` and `timing.json`
/// into `dir`. Only `timing.json` (and `step_micros` when `record_timing`)
/// varies between identical invocations.
pub fn write_artifacts(dir: &Path, exp: &Experiment, record_timing: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records: Vec<RunRecord> = exp
        .results
        .iter()
        .flat_map(|r| r.records.iter())
        .map(|r| RunRecord {
            step_micros: if record_timing { r.step_micros } else { None },
            ..*r
        })
        .collect();
    write_records_file(&dir.join("records.csv"), &records)?;

    let summary = serde_json::to_string_pretty(&exp.summary)? + "\n";
    let path = dir.join("summary.json");
    std::fs::write(&path, summary).map_err(|e| Error::io(&path, e))?;

    let path = dir.join("ospa_mean.csv");
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["k", "ospa", "loc", "card"])?;
    if let Some(s) = &exp.summary.mean_ospa {
        for (i, v) in s.values.iter().enumerate() {
            let k = s.first_k + i as ScanIndex;
            w.write_record([k.to_string(), fmt_real(v.ospa), fmt_real(v.loc), fmt_real(v.card)])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("timing.json");
    let timing = serde_json::to_string_pretty(&exp.timing)? + "\n";
    std::fs::write(&path, timing).map_err(|e| Error::io(&path, e))?;
    Ok(())
}
