//! Scenario files, job runner and output formats for `rodsim-core`.

pub mod compile;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod spectrum;
pub mod table;
pub mod workers;

pub use run::{execute, prepare, Plan, RunError, RunReport, RunStatus};
pub use scenario::{Scenario, ScenarioError};
