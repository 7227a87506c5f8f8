//! Library surface of the pipeline driver, so integration tests can run
//! commands in-process.

pub mod commands;
pub mod config;

pub use commands::Pipeline;
pub use config::{CellSpec, ExperimentConfig};
