//! Command-line front end: degradation, restoration, evaluation, transform
//! curves and experiment sweeps.

pub mod commands;
pub mod config;
pub mod exit;
pub mod experiment;
pub mod inputs;
pub mod meta;
pub mod pipeline;

pub use commands::{run, Cli};
pub use experiment::cmd_experiment;
