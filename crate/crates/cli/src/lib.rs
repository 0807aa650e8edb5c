//! Scenario files, pipelines and CSV output for the `oscnet` binary.

pub mod app;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;
pub mod scenario;

pub use config::ScenarioConfig;
pub use error::CliError;
