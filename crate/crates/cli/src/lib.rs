//! Command-line front end: parameter files, experiment commands, CSV and SVG
//! output.

pub mod commands;
pub mod config_file;
pub mod error;
pub mod svg;
pub mod table;

pub use commands::{cmd_leakage, cmd_report, cmd_run, cmd_sweep, Common, LeakageArgs, Outcome, SweepArgs};
pub use config_file::{parse_config, ConfigFile, Protocol, Settings};
pub use error::CliError;
