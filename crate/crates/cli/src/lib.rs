//! Configuration parsing, subcommand orchestration, and byte-stable CSV
//! output for the circulator simulator.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use error::CliError;
