//! Configuration loading and the subcommands of the `ncfield` binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_brackets, cmd_evolve, cmd_spectrum, cmd_verify, CheckRow, RouteChoice, VerifyReport};
pub use config::{ConfigError, InitialState, RunConfig, Variables};
