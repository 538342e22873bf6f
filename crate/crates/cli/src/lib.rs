//! Plumbing behind the `hrk` binary: config parsing, CSV tables, replicate
//! summaries and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod summary;
pub mod table;
