//! Command-line front end for the capillary growth simulator.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_compare, cmd_run, cmd_sweep, simulate, CliError, Comparison, RunOutcome, SweepParam,
    SweepRow,
};
pub use config::{ConfigError, RawConfig, RunConfig};
