//! Configuration, file formats and mode dispatch behind the `fhn` binary.

pub mod config;
pub mod csv;
pub mod error;
pub mod run;

pub use config::{parse_config, parse_config_str, Mode, RunConfig};
pub use csv::{read_field_csv, write_field_csv};
pub use error::CliError;
pub use run::{run, Outcome, RunEnv};
