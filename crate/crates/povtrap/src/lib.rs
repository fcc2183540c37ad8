//! Configuration, file formats, parallel execution and subcommands for the
//! `povtrap` poverty-trap model. The model itself lives in `povtrap-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod runner;

pub use config::{Preset, RunConfig};
pub use error::{CliError, Result};
