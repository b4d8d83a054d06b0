//! Scenario files, result writers and the grid-search oracle.

pub mod oracle;
pub mod scenario_file;
pub mod writers;

pub use oracle::{run_oracle, OracleResult};
pub use scenario_file::{EvSpec, ProfilesSpec, ProsumerSpec, ScenarioFile, SimulationSettings};
pub use writers::{format_number, RunSummary};
