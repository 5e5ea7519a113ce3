//! Experiment harness around `ptrnet-ea-core`: dataset files, run
//! configuration, checkpoints, metrics, reports, and the CLI.

pub mod checkpoint;
pub mod cli;
pub mod dataset_io;
pub mod metrics;
pub mod pool;
pub mod report;
pub mod runconfig;
pub mod runner;
