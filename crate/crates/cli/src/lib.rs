//! Command-line front end: configuration loading and the subcommands.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{run, Cli, EXIT_CRASH, EXIT_ERROR, EXIT_OK};
pub use config::{load_config, parse_config, FuzzConfig};
pub use error::CliError;
