//! Interpretable two-chain qualitative reasoning for two-option questions.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, IO and the command
//! line live in the `qreason` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod answer;
pub mod check;
pub mod data;
pub mod deduction;
pub mod diff;
pub mod eval;
pub mod heads;
pub mod model;
pub mod text;
pub mod train;
mod error;
mod kinds;

pub use error::{Error, Result};
pub use kinds::{Direction, HeadKind, Polarity, ReasoningType, ValueDir, WorldOrder};
