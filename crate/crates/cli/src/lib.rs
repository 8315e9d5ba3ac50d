//! Configuration, presets and file output for the `zeno` binary.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{ConfigError, ConfigErrors, RawConfig, RunConfig};
pub use run::{execute, sweep, write_outputs, RunResult, RunSummary};
