//! Command-line driver for deformations, earthquakes, verification and limit sets.

pub mod config;
pub mod limitset;
pub mod report;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{run, Command, Outcome};
