//! Run configuration, stored as TOML.
//!
//! ```toml
//! schema_version = 1
//!
//! [scenario]
//! kind = "linear"        # or "nonlinear"
//! clutter_rate = 2.0
//!
//! [tracker]
//! tau1 = 3.0
//! min_cluster_size = 4
//!
//! [monte_carlo]
//! runs = 200
//! master_seed = 1
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every section and key is optional except `schema_version`; missing keys
//! take their defaults and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lifecycle::TrackerConfig;
use crate::metrics::OspaConfig;
use crate::simulator::ScenarioConfig;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub runs: u32,
    pub master_seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            runs: 200,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Fill the `step_micros` column of the per-scan records. Off by default
    /// because wall-clock timings make the records non-reproducible; timing
    /// statistics are always written to a separate file.
    pub record_timing: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            record_timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub tracker: TrackerConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub ospa: OspaConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: ScenarioConfig::default(),
            tracker: TrackerConfig::default(),
            monte_carlo: MonteCarloConfig::default(),
            ospa: OspaConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    /// Checks every block; returns warnings for legal but questionable
    /// settings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.monte_carlo.runs == 0 {
            return Err(Error::Config("monte_carlo.runs must be at least 1".into()));
        }
        self.scenario.validate()?;
        self.ospa.validate()?;
        self.tracker.validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses and validates a configuration; returns it with any warnings.
pub fn parse_config(text: &str) -> Result<(RunConfig, Vec<String>)> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let warnings = cfg.validate()?;
    Ok((cfg, warnings))
}

pub fn load_config(path: &Path) -> Result<(RunConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
