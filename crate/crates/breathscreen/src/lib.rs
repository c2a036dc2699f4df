//! File formats, report writers and the command-line driver around
//! `breathscreen-core`.

pub mod archive;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod plot;
pub mod report;

pub use breathscreen_core as core;
pub use error::{Error, Result};
