//! File formats and subcommands of the `ddsynth` binary.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod waveform_file;

pub use error::{CliError, Result};
