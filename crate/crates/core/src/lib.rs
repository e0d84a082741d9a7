//! Pairwise-gated hierarchical layer fusion for audio deepfake detection.
//!
//! The crate is `no_std` (with `alloc`). It contains the detector itself
//! (forward pass, loss, analytic gradients), the Adam optimizer and training
//! loop, the evaluation metrics (EER family, test-time-augmentation
//! aggregation), a seeded synthetic layer-stack generator and the waveform
//! perturbations used to build test-time views. File formats and the command
//! line live in the `raptor` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dsp;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
