//! Protocol files, bundled fixtures and the `qmip` command-line tool.

pub mod commands;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod record;

pub use error::{CliError, CliResult};
