//! IO, file formats, configuration, and the command implementations behind
//! the `pconv` binary. The algorithms live in `pconv-core`; this crate owns
//! everything that touches the filesystem or a terminal.

pub mod cli;
pub mod commands;
pub mod config;
pub mod files;
pub mod io;
pub mod parallel;
pub mod report;

pub use commands::CliError;
