//! File formats, plots and the command-line front end for `eqdrop-core`.
//!
//! The `eqdrop` binary has four subcommands: `solve` writes closed-form
//! optima, `train` runs dropout SGD sweeps, `verify` runs the numeric check
//! suite and `landscape` evaluates the scalar two-unit objective on a grid.
//! Everything here is also callable as a library; [`commands`] takes resolved
//! configurations and returns summaries.

pub mod cli;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod svg;

pub use error::{CliError, ExitCode};
