//! File formats, checkpoints, reports and the command line around
//! [`qreason_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod jsonl;
pub mod manifest;
pub mod report;

mod error;

pub use error::{Error, Result};
pub use qreason_core as core;
