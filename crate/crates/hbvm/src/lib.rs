//! Command-line front end, benchmark harness and file formats for
//! [`hbvm_core`].
//!
//! * [`spec`]: JSON benchmark specifications.
//! * [`bench`]: parallel grid execution, text tables and CSV.
//! * [`cli`]: the `tableau`, `scheme`, `optimize`, `run`, `bench` and
//!   `order` subcommands.
#![warn(missing_docs)]

pub mod bench;
pub mod cli;
mod error;
pub mod format;
pub mod spec;

pub use error::{CliError, Result};
