//! Command-line front end for PWARX identification.

pub mod args;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod model_file;

pub use args::Cli;
pub use commands::{run, Outcome};
pub use config::{parse_config, RunConfig};
pub use error::CliError;
