//! Library surface of the experiment runner, kept separate from the binary
//! so integration tests can drive commands directly.

pub mod commands;
pub mod config;
pub mod error;
pub mod instance;

pub use commands::{cmd_oracle_check, cmd_sample};
pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, Result, EXIT_BUDGET, EXIT_CONFIG, EXIT_ORACLE};
