//! Std companion of `raptor-core`: binary and text file formats, run
//! configuration, a rayon-backed executor and the `raptor` command line.

pub mod bytes;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod features;
pub mod gatemap;
pub mod jsonl;
pub mod manifest;
pub mod report;
pub mod scores;
pub mod wav;

pub use error::{Error, Result};
