//! File formats, configuration, JSON reports and the Monte Carlo harness for
//! placebo-adjusted discontinuity estimation. The estimators themselves live
//! in `pdd-core`.

pub mod cli;
pub mod config;
pub mod data;
pub mod mc;
pub mod report;

pub use config::{ConfigError, RunConfig, Settings};
pub use data::{load_csv, read_csv, write_csv, Bindings, DataError, Loaded};
pub use mc::{monte_carlo, EstimatorSettings, McReport};
pub use report::{run_estimate, run_rdd, to_json, EstimateDocument, RddDocument};
