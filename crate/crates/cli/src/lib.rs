//! Scenario files and subcommands for the `growthlab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

pub use commands::{classification_matrix, run, MatrixRow, Outcome, Subcommand};
pub use config::{parse_config, parse_str, ScenarioConfig};
