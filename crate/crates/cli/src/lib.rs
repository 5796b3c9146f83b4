//! Command-line front end: CSV ingestion, configuration and report output
//! for the sphericity tests and simulation campaigns.

pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod report;

pub use commands::{execute, run_generate, run_simulation_command, run_test_command};
pub use config::{Command, OutputFormat, RunConfig};
pub use error::{CliError, CliResult};
