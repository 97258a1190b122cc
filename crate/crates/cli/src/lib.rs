//! Command-line front end: record ingestion, run configuration and the
//! `fit`, `simulate`, `evaluate`, `replicate` and `coverage` subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod records;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
