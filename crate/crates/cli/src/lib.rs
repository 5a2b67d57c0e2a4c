//! Configuration, file workflows and provenance for the `nisebath` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use config::{LoadedConfig, RunConfig};
pub use error::{CliError, CliResult};
