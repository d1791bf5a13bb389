//! Command-line front-end: configuration parsing, experiment drivers and
//! report emission for the fractional p-Laplacian lab.

// `!(a < b)` is intentional throughout: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

pub use commands::{exit, run_cli, Cli, Command};
pub use config::{ConfigError, RunConfig, SigmaMode};
