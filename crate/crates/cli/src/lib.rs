//! Command-line front end: reads curve tables, runs the estimation stages
//! and writes CSV and JSON artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::{run, Cli, Command};
pub use config::RunConfig;
pub use error::{CliError, Result};
