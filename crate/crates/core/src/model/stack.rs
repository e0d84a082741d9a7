use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    BonaFide,
    Spoof,
    Unlabeled,
}

impl Label {
    /// BCE target: bona fide 0, spoof 1.
    pub fn target(self) -> Option<f64> {
        match self {
            Label::BonaFide => Some(0.0),
            Label::Spoof => Some(1.0),
            Label::Unlabeled => None,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::BonaFide),
            1 => Some(Label::Spoof),
            255 => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Label::BonaFide => 0,
            Label::Spoof => 1,
            Label::Unlabeled => 255,
        }
    }
}

/// Hidden states of one utterance view: `layers × frames × dim` values in
/// (layer, frame, dim) order. Features are stored as `f32` and widened to
/// `f64` when the model reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub utt_id: String,
    pub dataset_id: String,
    pub label: Label,
    /// 0 is the clean view; `k ≥ 1` is augmented view `k`.
    pub view_id: u8,
    layers: usize,
    frames: usize,
    dim: usize,
    features: Vec<f32>,
}

impl LayerStack {
    pub fn new(
        utt_id: impl Into<String>,
        dataset_id: impl Into<String>,
        label: Label,
        view_id: u8,
        (layers, frames, dim): (usize, usize, usize),
        features: Vec<f32>,
    ) -> Result<Self> {
        if layers < 2 || frames < 1 || dim < 1 {
            return Err(invalid!("layer stack needs L >= 2, T >= 1, D >= 1 (got {layers}x{frames}x{dim})"));
        }
        let expected = layers
            .checked_mul(frames)
            .and_then(|n| n.checked_mul(dim))
            .ok_or_else(|| invalid!("layer stack dims {layers}x{frames}x{dim} overflow"))?;
        if features.len() != expected {
            return Err(invalid!("layer stack holds {} values, dims require {expected}", features.len()));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(invalid!("layer stack feature {i} is not finite"));
        }
        Ok(Self {
            utt_id: utt_id.into(),
            dataset_id: dataset_id.into(),
            label,
            view_id,
            layers,
            frames,
            dim,
            features,
        })
    }

    #[inline]
    pub fn layers(&self) -> usize {
        self.layers
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn features(&self) -> &[f32] {
        &self.features
    }

    /// Feature vector of `layer` at `frame` (both zero-based).
    #[inline]
    pub fn frame(&self, layer: usize, frame: usize) -> &[f32] {
        let start = (layer * self.frames + frame) * self.dim;
        &self.features[start..start + self.dim]
    }

    /// All frames of one layer, `frames × dim`.
    #[inline]
    pub fn layer(&self, layer: usize) -> &[f32] {
        let n = self.frames * self.dim;
        &self.features[layer * n..(layer + 1) * n]
    }
}
