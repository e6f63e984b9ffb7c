//! Scenario catalogue, config ingestion, execution and table emission
//! around `accretia-core`.

pub mod catalog;
pub mod config;
pub mod expr;
pub mod output;
pub mod scenario;

pub use config::{ScenarioConfig, Theorem};
pub use scenario::{run_scenario, RunOverrides, ScenarioOutcome};
