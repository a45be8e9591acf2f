//! Scenario-driven command-line runs: configuration, execution and figures.

pub mod render;
pub mod run;
pub mod scenario;

pub use run::{load_scenario, run, RunError, RunManifest, RunOptions};
pub use scenario::Scenario;
