//! Simulation harness for first-passage percolation on configuration models:
//! run configuration, seeded streams, CSV output, experiments and the `fpp`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod output;
pub mod seeds;
