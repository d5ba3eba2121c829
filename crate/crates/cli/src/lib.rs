#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Experiment harness behind the `finslab` binary: sectioned key=value
//! configs, the seven experiment pipelines, and report emission.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Config, ConfigError};
pub use experiments::{run_experiment, Experiment, HarnessError, RunOptions};
pub use report::{Record, Report};
