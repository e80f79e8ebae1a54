//! Command-line front end for the `lislam` observer library: TOML run
//! configuration, trajectory CSV logs and deterministic summaries.

pub mod commands;
pub mod config;
pub mod csvlog;
pub mod error;
pub mod report;

pub use commands::run_command;
pub use error::CliError;
