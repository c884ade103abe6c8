//! Configuration, Monte Carlo orchestration and persistence.
//!
//! A run configuration names a scenario, tracker parameters, the number of
//! runs and a master seed. Each run derives its own seed from the master
//! seed and its index, so any run can be reproduced in isolation and the
//! batch output does not depend on the number of worker threads.

pub mod config;
pub mod experiment;
pub mod records;
pub mod scenario_io;
pub mod seed;

pub use config::{load_config, parse_config, MonteCarloConfig, OutputConfig, RunConfig, SCHEMA_VERSION};
pub use experiment::{run_experiment, simulate_run, write_artifacts, Experiment, RunResult, RunSummary};
pub use records::{read_records, write_records, RunRecord};
pub use seed::{run_seed, splitmix64};
