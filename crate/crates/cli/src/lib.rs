//! Library side of the `convoga` command-line tool: config parsing, CSV
//! output and the subcommand bodies.

pub mod commands;
pub mod config;
pub mod output;
