//! File formats, check-in loading and the `elastic` command line, on top of
//! `elastic-core`.

pub mod atomic;
pub mod cellsets;
pub mod checkins;
pub mod cli;
pub mod codec;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod export;
pub mod gridfile;
pub mod keyvalue;
pub mod massfile;
pub mod quality;

pub use error::{GeoError, Result};
