//! Waveform perturbations used to build test-time views.
//!
//! All transforms are deterministic functions of their inputs (noise is
//! seeded) and return a waveform of the same length as the input.

mod mulaw;
mod perturb;
mod resample;

pub use mulaw::{linear_to_ulaw, ulaw_to_linear};
pub use perturb::{add_noise, crop_pad, make_views, speed_pitch, voip_codec, TtaConfig, ViewKind};
pub use resample::resample;

use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Sample rate of every pipeline entry point.
pub const PIPELINE_RATE: u32 = 16_000;

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    sample_rate: u32,
    samples: Vec<f64>,
}

impl Waveform {
    pub fn new(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(invalid!("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !(s.is_finite() && (-1.0..=1.0).contains(s))) {
            return Err(invalid!("sample {i} ({}) is outside [-1, 1]", samples[i]));
        }
        Ok(Self { sample_rate, samples })
    }

    /// Builds a waveform, clamping every sample into `[-1, 1]`.
    pub(crate) fn clamped(sample_rate: u32, mut samples: Vec<f64>) -> Self {
        for s in &mut samples {
            *s = s.clamp(-1.0, 1.0);
        }
        Self { sample_rate, samples }
    }

    #[inline]
    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean square of the samples.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    /// Resamples to `rate` (windowed sinc).
    pub fn resampled(&self, rate: u32) -> Result<Waveform> {
        if rate == self.sample_rate {
            return Ok(self.clone());
        }
        Ok(Waveform::clamped(rate, resample(&self.samples, self.sample_rate, rate)?))
    }
}
