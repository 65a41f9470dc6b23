//! Runnable surface of the simulator: manifests, scenario runs, sweeps and
//! the built-in catalog.

pub mod catalog;
pub mod config;
mod error;
pub mod run;
pub mod sweep;

pub use catalog::{builtin, list_scenarios, CatalogEntry};
pub use config::{load_config, parse_config, Column, Config, Output, Reduce, ScenarioSpec, SweepSpec, TimeSpec};
pub use error::{HarnessError, Result};
pub use run::{execute, run_scenario, ScenarioOutput};
pub use sweep::{run_sweep, SweepRow, SweepSummary};
