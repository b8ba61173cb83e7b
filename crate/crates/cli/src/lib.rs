//! Command-line plumbing for the CeNN tracker: file formats, run
//! configuration and the subcommand bodies used by the `cenn` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
