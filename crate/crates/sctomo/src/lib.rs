//! File formats, parallel runners and the `sctomo` command line for
//! [`sctomo_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod report;
pub mod runners;

pub use error::{CliError, Result};
