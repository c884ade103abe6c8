//! OSPA between estimate and truth sets, per-scan series across Monte Carlo
//! runs, and step-timing statistics.

use serde::{Deserialize, Serialize};

use crate::lifecycle::ScanOutput;
use crate::simulator::GroundTruth;
use crate::types::{Position2, ScanIndex};
use crate::{Error, Result};

/// Largest set size accepted by the exhaustive assignment.
pub const MAX_ASSIGNMENT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OspaConfig {
    /// Cut-off distance, m.
    pub c: f64,
    /// Order.
    pub p: f64,
}

impl Default for OspaConfig {
    fn default() -> Self {
        Self { c: 1000.0, p: 2.0 }
    }
}

impl OspaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("ospa cut-off c = {} must be positive", self.c)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::Config(format!("ospa order p = {} must be >= 1", self.p)));
        }
        Ok(())
    }
}

/// OSPA and its localization and cardinality parts. With p > 1 the parts do
/// not sum to the total; `loc^p + card^p = ospa^p` instead.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OspaComponents {
    pub ospa: f64,
    pub loc: f64,
    pub card: f64,
}

fn best_assignment(small: &[Position2], large: &[Position2], cfg: &OspaConfig) -> f64 {
    fn dfs(i: usize, small: &[Position2], cost: &[Vec<f64>], used: &mut [bool], acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if i == small.len() {
            *best = acc;
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                dfs(i + 1, small, cost, used, acc + cost[i][j], best);
                used[j] = false;
            }
        }
    }
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| large.iter().map(|b| a.distance(*b).min(cfg.c).powf(cfg.p)).collect())
        .collect();
    let mut used = vec![false; large.len()];
    let mut best = f64::INFINITY;
    dfs(0, small, &cost, &mut used, 0.0, &mut best);
    best
}

/// OSPA of order p with cut-off c. Symmetric in its arguments; both empty
/// gives zero.
pub fn ospa_components(est: &[Position2], truth: &[Position2], cfg: &OspaConfig) -> Result<OspaComponents> {
    let (small, large) = if est.len() <= truth.len() { (est, truth) } else { (truth, est) };
    let n = large.len();
    if n == 0 {
        return Ok(OspaComponents::default());
    }
    if n > MAX_ASSIGNMENT {
        return Err(Error::invalid(format!(
            "OSPA assignment supports sets of at most {MAX_ASSIGNMENT} points, got {n}"
        )));
    }
    if small.iter().chain(large).any(|p| !p.is_finite()) {
        return Err(Error::invalid("OSPA of non-finite positions"));
    }
    let loc_sum = best_assignment(small, large, cfg);
    let card_sum = cfg.c.powf(cfg.p) * (n - small.len()) as f64;
    let nf = n as f64;
    let inv_p = 1.0 / cfg.p;
    Ok(OspaComponents {
        ospa: ((loc_sum + card_sum) / nf).powf(inv_p),
        loc: (loc_sum / nf).powf(inv_p),
        card: (card_sum / nf).powf(inv_p),
    })
}

pub fn ospa(est: &[Position2], truth: &[Position2], cfg: &OspaConfig) -> Result<f64> {
    ospa_components(est, truth, cfg).map(|c| c.ospa)
}

/// Per-scan OSPA for scans `first_k..first_k + values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OspaSeries {
    pub first_k: ScanIndex,
    pub values: Vec<OspaComponents>,
}

impl OspaSeries {
    /// OSPA of a tracker run against truth. `outputs` must cover exactly the
    /// truth's scans 1..=duration, in order.
    pub fn from_run(outputs: &[ScanOutput], truth: &GroundTruth, cfg: &OspaConfig) -> Result<Self> {
        if outputs.len() != truth.duration() as usize {
            return Err(Error::Protocol(format!(
                "{} tracker outputs for {} truth scans",
                outputs.len(),
                truth.duration()
            )));
        }
        let mut values = Vec::with_capacity(outputs.len());
        for (i, out) in outputs.iter().enumerate() {
            let k = i as ScanIndex + 1;
            if out.k != k {
                return Err(Error::Protocol(format!("tracker output for scan {} where {k} was expected", out.k)));
            }
            let est: Vec<Position2> = out.estimate.into_iter().collect();
            let tru: Vec<Position2> = truth.position(k).into_iter().collect();
            values.push(ospa_components(&est, &tru, cfg)?);
        }
        Ok(Self { first_k: 1, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: ScanIndex) -> Option<&OspaComponents> {
        k.checked_sub(self.first_k).and_then(|i| self.values.get(i as usize))
    }

    pub fn ospa_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.ospa)
    }

    /// Mean OSPA over the scans `from..=to` present in the series.
    pub fn mean_over(&self, from: ScanIndex, to: ScanIndex) -> Option<f64> {
        if self.values.is_empty() {
            return None;
        }
        let lo = from.max(self.first_k);
        let hi = to.min(self.first_k + self.values.len() as ScanIndex - 1);
        if lo > hi {
            return None;
        }
        let v = &self.values[(lo - self.first_k) as usize..=(hi - self.first_k) as usize];
        Some(v.iter().map(|c| c.ospa).sum::<f64>() / v.len() as f64)
    }

    /// Pointwise mean of aligned series, componentwise.
    pub fn mean(series: &[OspaSeries]) -> Result<OspaSeries> {
        let first = series.first().ok_or_else(|| Error::invalid("mean of zero OSPA series"))?;
        if series.iter().any(|s| s.first_k != first.first_k || s.len() != first.len()) {
            return Err(Error::Protocol("OSPA series cover different scan ranges".into()));
        }
        let n = series.len() as f64;
        let values = (0..first.len())
            .map(|i| {
                let mut acc = OspaComponents::default();
                for s in series {
                    acc.ospa += s.values[i].ospa;
                    acc.loc += s.values[i].loc;
                    acc.card += s.values[i].card;
                }
                OspaComponents {
                    ospa: acc.ospa / n,
                    loc: acc.loc / n,
                    card: acc.card / n,
                }
            })
            .collect();
        Ok(OspaSeries {
            first_k: first.first_k,
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub count: usize,
    pub mean: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
}

pub fn timing_stats(samples: &[f64]) -> Result<TimingStats> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("non-finite timing sample"));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    Ok(TimingStats {
        count: n,
        mean,
        p95: sorted[rank - 1],
    })
}
