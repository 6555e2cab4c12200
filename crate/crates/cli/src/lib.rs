//! Command-line front end for training, scoring and evaluating robust
//! low-rank anomaly detectors.

pub mod commands;
pub mod config;
pub mod model_file;
pub mod records;

pub use commands::{exit_code, run, Cli};
