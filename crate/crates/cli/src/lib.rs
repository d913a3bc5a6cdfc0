//! Library side of the `vrti` command-line tool: scenario configuration and
//! the subcommands, so that tests can drive them without spawning processes.

pub mod commands;
pub mod config;
