//! File formats and the `probkt` command line.
//!
//! Everything here is plumbing around `probkt-core`. Scenes travel as
//! line-delimited JSON and experiments are described in TOML; failures map
//! onto stable process exit codes.

pub mod cli;
pub mod config;
pub mod error;
pub mod records;
pub mod scenefile;

pub use error::{CliError, ExitStatus};
