//! File formats, configuration and the command-line harness around
//! `optomech-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod parallel;
pub mod report;
pub mod run;
pub mod table;

pub use error::CliError;
