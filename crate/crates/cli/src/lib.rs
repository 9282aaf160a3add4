//! Scenario files, report serialization and the `exsim` command line.

pub mod app;
pub mod csv;
pub mod report;
pub mod scenario;

pub use report::{execute, RunOutcome, RunReport};
pub use scenario::{
    load_scenario, parse_scenario, Scenario, ScenarioBody, ScenarioError, ScenarioKind,
};
