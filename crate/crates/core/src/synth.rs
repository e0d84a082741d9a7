//! Seeded synthetic layer stacks with a planted, layer-localized spoof
//! artifact.
//!
//! Base features are i.i.d. standard normal. Spoof utterances additionally
//! carry a fixed ±1 pattern, scaled by `artifact_gain · class_separation`,
//! on the artifact layers only (the same pattern on every frame). The
//! augmented view adds Gaussian jitter of scale `jitter_scale` on top of the
//! clean view. Each (seed, utterance, view, layer) addresses its own random
//! stream.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::model::{Label, LayerStack};
use crate::rng::{self, Gaussian};

const PATTERN_STREAM: u64 = 0x7061_7474;
const FEATURE_STREAM: u64 = 0x6665_6174;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub layers: usize,
    pub frames: usize,
    pub dim: usize,
    /// One-based layer indices carrying the spoof artifact.
    pub artifact_layers: Vec<usize>,
    pub artifact_gain: f64,
    pub class_separation: f64,
    pub jitter_scale: f64,
    pub seed: u64,
    pub dataset_id: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            layers: 12,
            frames: 200,
            dim: 32,
            artifact_layers: vec![5, 6, 7, 8],
            artifact_gain: 0.5,
            class_separation: 1.0,
            jitter_scale: 0.5,
            seed: 0,
            dataset_id: String::from("synth"),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 2 || self.frames == 0 || self.dim == 0 {
            return Err(invalid!(
                "synthetic dims must satisfy L >= 2, T >= 1, D >= 1 (got {}x{}x{})",
                self.layers,
                self.frames,
                self.dim
            ));
        }
        if let Some(l) = self.artifact_layers.iter().find(|&&l| l == 0 || l > self.layers) {
            return Err(invalid!("artifact layer {l} outside 1..={}", self.layers));
        }
        for (name, v) in [
            ("artifact gain", self.artifact_gain),
            ("class separation", self.class_separation),
            ("jitter scale", self.jitter_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        Ok(())
    }

    pub fn is_artifact_layer(&self, zero_based: usize) -> bool {
        self.artifact_layers.contains(&(zero_based + 1))
    }

    /// The ±1 artifact pattern of one layer (independent of the utterance).
    pub fn artifact_pattern(&self, zero_based_layer: usize) -> Vec<f64> {
        let mut stream = rng::stream(&[self.seed, PATTERN_STREAM, zero_based_layer as u64]);
        (0..self.dim).map(|_| if rand::Rng::gen::<bool>(&mut stream) { 1.0 } else { -1.0 }).collect()
    }

    pub fn utt_id(&self, index: u64) -> String {
        format!("{}-{index:06}", self.dataset_id)
    }
}

/// Corpus label convention: even indices are bona fide, odd are spoof.
pub fn synth_label(index: u64) -> Label {
    if index.is_multiple_of(2) {
        Label::BonaFide
    } else {
        Label::Spoof
    }
}

fn gaussian_block(parts: &[u64], n: usize) -> impl Iterator<Item = f64> {
    let mut g = Gaussian::new(rng::stream(parts));
    (0..n).map(move |_| g.sample())
}

/// Generates the clean view (view 0) and augmented view (view 1) of one
/// utterance.
pub fn synth_utterance(spec: &SynthSpec, index: u64, label: Label) -> Result<(LayerStack, LayerStack)> {
    spec.validate()?;
    let (l, t, d) = (spec.layers, spec.frames, spec.dim);
    let per_layer = t * d;
    let amplitude = spec.artifact_gain * spec.class_separation;
    let mut clean = Vec::with_capacity(l * per_layer);
    let mut aug = Vec::with_capacity(l * per_layer);
    for layer in 0..l {
        let base: Vec<f64> =
            gaussian_block(&[spec.seed, FEATURE_STREAM, index, 0, layer as u64], per_layer).collect();
        let pattern =
            (label == Label::Spoof && spec.is_artifact_layer(layer)).then(|| spec.artifact_pattern(layer));
        let jitter = gaussian_block(&[spec.seed, FEATURE_STREAM, index, 1, layer as u64], per_layer);
        for ((i, b), j) in base.into_iter().enumerate().zip(jitter) {
            let mut v = b;
            if let Some(p) = &pattern {
                v += amplitude * p[i % d];
            }
            let c = v as f32;
            clean.push(c);
            aug.push(if spec.jitter_scale == 0.0 { c } else { (v + spec.jitter_scale * j) as f32 });
        }
    }
    let id = spec.utt_id(index);
    let clean = LayerStack::new(id.clone(), spec.dataset_id.clone(), label, 0, (l, t, d), clean)?;
    let aug = LayerStack::new(id, spec.dataset_id.clone(), label, 1, (l, t, d), aug)?;
    Ok((clean, aug))
}
