//! Command-line front end of the `parnet` estimator.
//!
//! Every run writes a `manifest.json` next to its outputs; `parnet replay`
//! regenerates the same bytes from it, independent of `--jobs`.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod model;
pub mod table;

pub use error::{CliError, Result};
