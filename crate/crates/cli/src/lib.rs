//! Scenario runner around `swarm-core`: TOML scenario configs in, CSV
//! artifacts and containment reports out.
//!
//! Everything an output file contains is a pure function of the config and
//! its seeds. No wall-clock seeding, no timestamps, rerunning a scenario is
//! byte-identical.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use error::{CliError, ExitCode};
