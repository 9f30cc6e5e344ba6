//! Command-line harness for two-round EM: file formats, experiment specs,
//! the built-in experiment suites and the `twoem` command dispatcher.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod files;

pub use error::CliError;
