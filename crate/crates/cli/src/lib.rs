//! Command-line front end: `compute`, `check`, `certify` and `constancy`,
//! each emitting a JSON [`RunReport`].

pub mod commands;
pub mod mapfile;
pub mod report;

pub use commands::{run, Cli, CliError, Command};
pub use report::{RunReport, Status};
