//! Command-line front end for `shtsynth`: coefficient generation, synthesis,
//! oracle verification, rendering and benchmarks, plus the file formats
//! they exchange.

pub mod commands;
pub mod error;
pub mod formats;
pub mod render;

pub use error::{CliError, Result};
