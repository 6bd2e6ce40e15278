//! Scenario files, verification suites and result writers behind the
//! `fringebench` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod suites;

pub use error::{CliError, CliResult};
