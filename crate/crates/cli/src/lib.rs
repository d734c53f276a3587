//! Scenario runner for `kirchhoff-core`: flat config files, built-in presets,
//! diagram CSVs, threshold reports and regime checks.

pub mod checks;
pub mod config;
pub mod presets;
pub mod report;
pub mod scenario;

pub use config::{parse_samples, ConfigError, FunctionSpec, Samples, ScenarioConfig};
pub use scenario::{run_scenario, write_artifacts, ScenarioError, ScenarioOutcome};
