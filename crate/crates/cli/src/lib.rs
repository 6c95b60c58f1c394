//! Library side of the `dynsched` binary: scenario configs and commands.

pub mod commands;
pub mod config;
