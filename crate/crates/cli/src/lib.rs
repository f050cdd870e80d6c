//! Configuration loading, output files and command pipelines behind the
//! `mechsolve` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_solve, cmd_sweep_alpha0, cmd_verify, CliError, Outcome, RunOptions};
pub use config::{LoadedConfig, ProblemConfig};
